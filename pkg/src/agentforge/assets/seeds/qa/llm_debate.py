def forward(self, taskInfo):
    initial_instruction = "Please think step by step and then solve the task."
    debate_instruction = (
        "You are given the latest thinking and answers of the other agents. Use them as "
        "additional advice: point out flaws you notice, reconsider your reasoning, and "
        "give your own updated answer."
    )
    judge_instruction = (
        "Given all the above thinking and answers, reason over them carefully and "
        "provide a final answer to the task."
    )
    rounds = 2
    debaters = [
        FMModule(['thinking', 'answer'], role, role=role, temperature=0.8)
        for role in self.debate_roles
    ]
    judge = FMModule(['thinking', 'answer'], 'Final Decision', temperature=0.1)
    context = []
    for i in range(rounds):
        instruction = initial_instruction if i == 0 else debate_instruction
        new_context = []
        for debater in debaters:
            thinking, answer = debater([taskInfo] + context, instruction, i)
            new_context.extend([thinking, answer])
        context = new_context
    thinking, answer = judge([taskInfo] + context, judge_instruction)
    return answer
