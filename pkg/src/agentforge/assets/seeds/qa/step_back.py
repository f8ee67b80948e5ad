def forward(self, taskInfo):
    principle_instruction = (
        "What concepts and principles are involved in solving this task? First think "
        "step by step about what kind of problem this is, then list all the relevant "
        "principles and how they apply."
    )
    solve_instruction = (
        "Given the question and the principles above, think step by step and then "
        "solve the task."
    )
    principle_module = FMModule(['thinking', 'principle'], 'Principle Extractor')
    solver = FMModule(['thinking', 'answer'], 'Step-back Solver')
    thinking, principle = principle_module([taskInfo], principle_instruction)
    solve_thinking, answer = solver([taskInfo, principle], solve_instruction)
    return answer
