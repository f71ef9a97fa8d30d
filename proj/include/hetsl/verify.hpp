// Copyright 2026 The hetsl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Built-in property and oracle suites behind the `verify` subcommand.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hetsl {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Beliefs exponentiate to a simplex within 1e-10 over 10^4 update/combine
// steps of each strategy.
CheckResult check_simplex_conservation(std::uint64_t seed, long steps = 10000);
// Closed-form Abar^t against repeated multiplication, t = 1..50, 1e-10.
CheckResult check_power_identity();
// Exact inverse binomial moment >= its approximation, and the gap decays
// with log-log slope <= -1.18 across n = 10, 40, 160.
CheckResult check_inverse_binomial();
// Closed-form Perron vector of Abar against power iteration, 1e-9.
CheckResult check_perron_closed_form();
// Per step, psi-ratio = delta * likelihood ratio + (1 - delta) * mu-ratio
// within 1e-12.
CheckResult check_delta_interpolation(std::uint64_t seed, long steps = 2000);
// Noiseless series: estimates at the true delta recover the injected
// ratios within 1e-10 and the fit error is minimal there.
CheckResult check_inverse_round_trip(std::uint64_t seed);
// scan_delta argmin within 0.05 of the generator delta for >= 90% of seeds.
CheckResult check_scan_delta(std::uint64_t seed, int seeds = 50);
// Relative gap between exact E[A] and Abar shrinks over n = 10, 20, 40.
CheckResult check_expected_matrix_trend();
// Truncated steady-state series against the symmetric closed form, 1e-9.
CheckResult check_steady_state_closed_form();

std::vector<CheckResult> run_verify_suite(std::uint64_t seed);

nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace hetsl
