def forward(self, taskInfo):
    initial_instruction = "Please think step by step and then solve the task."
    qd_instruction = (
        "Given the previous attempts above, try to come up with another interesting way "
        "to solve the task that is different from all the approaches so far."
    )
    judge_instruction = (
        "Given all the above solutions, reason over them carefully and provide a final "
        "answer to the task."
    )
    solver = FMModule(['thinking', 'answer'], 'Quality-Diversity', temperature=0.8)
    judge = FMModule(['thinking', 'answer'], 'Final Decision', temperature=0.1)
    iterations = 3
    context = []
    thinking, answer = solver([taskInfo], initial_instruction)
    context.extend([thinking, answer])
    for i in range(iterations):
        thinking, answer = solver([taskInfo] + context, qd_instruction, i)
        context.extend([thinking, answer])
    final_thinking, final_answer = judge([taskInfo] + context, judge_instruction)
    return final_answer
