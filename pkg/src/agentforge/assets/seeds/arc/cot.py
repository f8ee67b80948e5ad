def forward(self, taskInfo):
    cot_instruction = (
        "Please think step by step about the transformation rule shared by the example "
        "pairs, then write a complete Python function transform(grid) that implements it."
    )
    cot_module = FMModule(['thinking', 'code'], 'Chain-of-Thought')
    thinking, code = cot_module([taskInfo], cot_instruction)
    return self.get_test_output_from_code(code)
