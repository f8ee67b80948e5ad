def forward(self, taskInfo):
    roles = self.role_set or ['helpful assistant']
    routing_instruction = (
        "Read the task and select exactly one role from the list below that is best "
        "suited to solve it. Reply with that role text verbatim in 'choice'.\n"
        "Roles:\n" + "\n".join("- " + role for role in roles)
    )
    router = FMModule(['thinking', 'choice'], 'Role Router')
    thinking, choice = router([taskInfo], routing_instruction)
    chosen = choice.content.strip()
    if chosen not in roles:
        chosen = roles[0]
    expert = FMModule(['thinking', 'answer'], 'Dynamic Expert', role=chosen)
    expert_thinking, answer = expert(
        [taskInfo], "Please think step by step and then solve the task."
    )
    return answer
