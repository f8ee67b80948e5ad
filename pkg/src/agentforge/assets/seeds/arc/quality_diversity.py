def forward(self, taskInfo):
    initial_instruction = (
        "Please think step by step about the transformation rule shared by the example "
        "pairs, then write a complete Python function transform(grid) that implements it."
    )
    qd_instruction = (
        "Given the previous attempts above, propose a DIFFERENT plausible transformation "
        "rule that is still consistent with the examples, and write its transform(grid) "
        "function."
    )
    solver = FMModule(['thinking', 'code'], 'Quality-Diversity', temperature=0.8)
    iterations = 3
    context = []
    candidates = []
    thinking, code = solver([taskInfo], initial_instruction)
    context.extend([thinking, code])
    candidates.append(code)
    for i in range(iterations):
        thinking, code = solver([taskInfo] + context, qd_instruction, i)
        context.extend([thinking, code])
        candidates.append(code)
    best_code = None
    best_correct = -1
    for code in candidates:
        feedback, correct, wrong = self.run_examples_and_get_feedback(code)
        if len(correct) > best_correct:
            best_correct = len(correct)
            best_code = code
    return self.get_test_output_from_code(best_code)
