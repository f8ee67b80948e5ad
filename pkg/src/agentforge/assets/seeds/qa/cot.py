def forward(self, taskInfo):
    cot_instruction = "Please think step by step and then solve the task."
    cot_module = FMModule(['thinking', 'answer'], 'Chain-of-Thought')
    thinking, answer = cot_module([taskInfo], cot_instruction)
    return answer
