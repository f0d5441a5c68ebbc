// Copyright 2026 The rnmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Solve the built-in benchmark at one state, then run a short closed loop without a region store.

#include <rnmpc/rnmpc.hpp>

#include <iostream>

int main() {
  using namespace rnmpc;
  const SystemModel model = builtin_example_model();

  const Vector x0 = Eigen::Vector2d(3.0, 4.0);
  const OCPInstance ocp(model, x0);
  const NLPSolution sol = solve_ocp(ocp);
  if (!sol.converged()) {
    std::cerr << "solve failed: " << to_string(sol.status) << '\n';
    return 1;
  }
  const ActiveSetInfo info = classify_active_sets(ocp, sol);
  std::cout << "U* = " << sol.U_star.transpose() << "\nV* = " << sol.V_star
            << "\nactive set " << format_index_set(info.active) << '\n';

  SolverContext ctx;
  const Trajectory traj = run_closed_loop(x0, 10, nullptr, model, ctx);
  for (const auto& s : traj.steps) std::cout << s.x.transpose() << "  u = " << s.u.transpose() << '\n';
  return 0;
}
