def forward(self, taskInfo):
    cot_instruction = "Please think step by step and then solve the task."
    num_paths = 5
    modules = [
        FMModule(['thinking', 'answer'], 'Chain-of-Thought', temperature=0.8)
        for _ in range(num_paths)
    ]
    answers = []
    for module in modules:
        thinking, answer = module([taskInfo], cot_instruction)
        answers.append(answer)
    return self.majority_vote(answers)
