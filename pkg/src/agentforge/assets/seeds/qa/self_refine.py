def forward(self, taskInfo):
    cot_instruction = "Please think step by step and then solve the task."
    critic_instruction = (
        "Review the latest thinking and answer above. Point out what is wrong or could be "
        "improved in 'feedback'. Then output exactly 'True' in 'correct' if the answer is "
        "correct and needs no changes, otherwise output 'False'."
    )
    refine_instruction = (
        "Given the feedback above, carefully reconsider your previous reasoning and "
        "provide a corrected final answer."
    )
    solver = FMModule(['thinking', 'answer'], 'Chain-of-Thought')
    critic = FMModule(['feedback', 'correct'], 'Critic')
    max_rounds = 5
    thinking, answer = solver([taskInfo], cot_instruction)
    for i in range(max_rounds):
        feedback, correct = critic([taskInfo, thinking, answer], critic_instruction, i)
        if correct.content == 'True':
            break
        if i == max_rounds - 1:
            break
        thinking, answer = solver([taskInfo, thinking, answer, feedback], refine_instruction, i)
    return answer
