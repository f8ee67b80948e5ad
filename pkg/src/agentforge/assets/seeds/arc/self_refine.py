def forward(self, taskInfo):
    initial_instruction = (
        "Please think step by step about the transformation rule shared by the example "
        "pairs, then write a complete Python function transform(grid) that implements it."
    )
    refine_instruction = (
        "The feedback above shows which examples your previous code got wrong. Reflect "
        "on the true transformation rule, fix the code, and provide a complete corrected "
        "transform(grid) function."
    )
    solver = FMModule(['thinking', 'code'], 'Chain-of-Thought')
    max_rounds = 5
    thinking, code = solver([taskInfo], initial_instruction)
    for i in range(max_rounds):
        feedback, correct, wrong = self.run_examples_and_get_feedback(code)
        if not wrong:
            break
        if i == max_rounds - 1:
            break
        thinking, code = solver([taskInfo, thinking, code, feedback], refine_instruction, i)
    return self.get_test_output_from_code(code)
