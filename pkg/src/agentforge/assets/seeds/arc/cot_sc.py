def forward(self, taskInfo):
    cot_instruction = (
        "Please think step by step about the transformation rule shared by the example "
        "pairs, then write a complete Python function transform(grid) that implements it."
    )
    num_paths = 5
    modules = [
        FMModule(['thinking', 'code'], 'Chain-of-Thought', temperature=0.8)
        for _ in range(num_paths)
    ]
    best_code = None
    best_correct = -1
    for module in modules:
        thinking, code = module([taskInfo], cot_instruction)
        feedback, correct, wrong = self.run_examples_and_get_feedback(code)
        if len(correct) > best_correct:
            best_correct = len(correct)
            best_code = code
    return self.get_test_output_from_code(best_code)
