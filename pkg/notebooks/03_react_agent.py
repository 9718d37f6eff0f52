"""
The ReAct scheduling loop
=========================

Drive the agent loop with offline mock providers: a scripted one that makes a
deliberate mistake, and a greedy one that reads the prompt text and answers
with shortest-job-first decisions. Swap in a live provider with
``make_provider(ProviderConfig(provider_kind="openai", model_name=...))``.
"""

from hpcsched import ClusterConfig, ScenarioSpec, generate_workload
from hpcsched.agent import build_prompt, mock_provider, run_react_loop
from hpcsched.policies import sjf_schedule
from hpcsched.sim import new_state

cluster = ClusterConfig()
jobs = generate_workload(ScenarioSpec("HighParallelism", 4, seed=1))
for j in jobs:
    print(j)

# What the model sees at t=0.
print(build_prompt(new_state(cluster, jobs)))

# %%
# A scripted run: try to start everything at once, then recover using the
# feedback. Rejections cost a call but never touch the cluster state.
script = [f"Thought: go\nAction: StartJob(job_id={j.job_id})" for j in jobs]
script += ["Thought: wait for capacity\nAction: Delay"] * 20
run = run_react_loop(jobs, cluster, mock_provider(script + ["Action: Stop"]), max_calls=60)
for i, entry in enumerate(run.scratchpad[:8], 1):
    print(entry.render(i))
    print()
print("schedule:", run.schedule)
print("overhead:", run.overhead.to_dict())

# %%
# The greedy mock reproduces the SJF policy exactly.
jobs = generate_workload(ScenarioSpec("HeterogeneousMix", 10, seed=4))
run = run_react_loop(jobs, cluster, mock_provider(policy="greedy-sjf-text"))
print("matches sjf:", run.schedule == sjf_schedule(jobs, cluster), "calls:", run.overhead.call_count)
