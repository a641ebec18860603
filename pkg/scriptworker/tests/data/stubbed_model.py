class _Gen:
    def __init__(self, index, p_min, p_max):
        self.index, self.P_min, self.P_max = index, p_min, p_max


class _Network:
    generators = [_Gen(0, 0.0, 100.0), _Gen(1, 0.0, 80.0)]


network = _Network()
P = {0: 12.0, 1: 30.0}
gen_cost = 4.2
power_balance = ["balance"]
angle_ref = ["ref"]


def _solve_stub(solver):
    print("solving with", solver)
    return {"status": "solved", "iterations": 3, "objective": gen_cost}

#@ Interface Object: feastol
# supplied through the platform before execution

#@ Constraint: P_limits
#@ Description: Generator active power limits
P_limits = []
for gen in network.generators:
    P_limits.extend([P[gen.index] >= gen.P_min, P[gen.index] <= gen.P_max])

#@ Objective: gen_cost_obj
gen_cost_obj = {"sense": "minimize", "value": gen_cost}

#@ Problem: problem
problem = {"objective": gen_cost_obj, "constraints": power_balance + angle_ref + P_limits}

#@ Solver: solver
solver = {"feastol": feastol, "maxiter": 100}

#@ Execution: info
info = _solve_stub(solver)

#@ Output Object: output_obj
output_obj = list(info.values())
