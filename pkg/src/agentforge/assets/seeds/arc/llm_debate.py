def forward(self, taskInfo):
    initial_instruction = (
        "Please think step by step about the transformation rule shared by the example "
        "pairs, then write a complete Python function transform(grid) that implements it."
    )
    debate_instruction = (
        "You are given the latest thinking and code of the other agents. Consider their "
        "proposed rules, point out flaws you notice, and write your own improved "
        "transform(grid) function."
    )
    judge_instruction = (
        "Given all the above thinking and code attempts, choose or synthesize the most "
        "plausible transformation rule and write the final transform(grid) function."
    )
    rounds = 2
    debaters = [
        FMModule(['thinking', 'code'], role, role=role, temperature=0.8)
        for role in self.debate_roles
    ]
    judge = FMModule(['thinking', 'code'], 'Final Decision', temperature=0.1)
    context = []
    for i in range(rounds):
        instruction = initial_instruction if i == 0 else debate_instruction
        new_context = []
        for debater in debaters:
            thinking, code = debater([taskInfo] + context, instruction, i)
            new_context.extend([thinking, code])
        context = new_context
    thinking, code = judge([taskInfo] + context, judge_instruction)
    return self.get_test_output_from_code(code)
