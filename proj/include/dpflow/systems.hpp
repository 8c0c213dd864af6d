#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpflow/dynamics.hpp"

namespace dpflow::systems {

using Params = std::map<std::string, double>;

/// x' = A x with A Metzler, constant orthant cone. Params a11, a12, a21, a22
/// (default [[-2, 1], [1, -2]]).
SystemSpec linear_metzler(const Params& p = {});
/// x' = -y, y' = x with the orthant cone (not DP).
SystemSpec rotation(const Params& p = {});
/// x' = -x + tanh(g y), y' = -y + tanh(g x); param gain (default 2).
SystemSpec bistable_tanh(const Params& p = {});
/// Cooperative Lotka-Volterra x_i' = x_i (r_i - x_i + a_i x_j); params r1, r2, a12, a21.
SystemSpec coop_lotka_volterra(const Params& p = {});
/// Geodesic relaxation X' = X^{1/2} log(X^{-1/2} P X^{-1/2}) X^{1/2} on SPD(n) with the
/// Loewner cone field; params n (2) and target scale p (P = p I, default 1).
SystemSpec spd_geodesic_relax(const Params& p = {});
/// x' = -x + h(y), y' = -y + h(x), h(u) = tanh(g (u - c)) + tanh(g (u + c)); gain 4, c 1.
SystemSpec tristable_tanh(const Params& p = {});
/// x' = -x in dimension dim (default 1) with the orthant cone.
SystemSpec decay(const Params& p = {});

/// Built-in system by name; ArgumentError for unknown names or parameters.
SystemSpec builtin(const std::string& name, const Params& p = {});
std::vector<std::string> builtin_names();

}  // namespace dpflow::systems
