#include "dpflow/systems.hpp"

#include <cmath>
#include <set>

#include "dpflow/errors.hpp"
#include "dpflow/spd.hpp"

namespace dpflow::systems {

namespace {

double param(const Params& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void require_known(const Params& p, std::initializer_list<const char*> keys, const std::string& name) {
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : p) {
    if (!known.count(k)) throw ArgumentError("system '" + name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) throw ArgumentError("parameter '" + k + "' must be finite");
  }
}

Box square(int n, double lo, double hi) {
  return Box{Vec::Constant(n, lo), Vec::Constant(n, hi)};
}

SystemSpec euclidean_orthant(std::string name, int n, VectorField f, JacobianFn df, Box region) {
  return SystemSpec{std::move(name),
                    Manifold::euclidean(n),
                    ConeField::constant(ConeSpec::orthant(n)),
                    std::move(f),
                    std::move(df),
                    {},
                    std::move(region)};
}

double sech2(double u) {
  const double c = std::cosh(u);
  return 1.0 / (c * c);
}

}  // namespace

SystemSpec linear_metzler(const Params& p) {
  require_known(p, {"a11", "a12", "a21", "a22"}, "linear_metzler");
  Mat a(2, 2);
  a << param(p, "a11", -2.0), param(p, "a12", 1.0), param(p, "a21", 1.0), param(p, "a22", -2.0);
  if (a(0, 1) < 0.0 || a(1, 0) < 0.0) throw ArgumentError("linear_metzler needs a12, a21 >= 0");
  auto sys = euclidean_orthant(
      "linear_metzler", 2,
      [a](std::span<const double> x, std::span<double> out) {
        out[0] = a(0, 0) * x[0] + a(0, 1) * x[1];
        out[1] = a(1, 0) * x[0] + a(1, 1) * x[1];
      },
      [a](const Vec&) { return a; }, square(2, -2.0, 2.0));
  sys.declared.dp = true;
  sys.declared.sdp = a(0, 1) > 0.0 && a(1, 0) > 0.0;
  sys.declared.h1 = sys.declared.h2 = sys.declared.h3 = true;
  return sys;
}

SystemSpec rotation(const Params& p) {
  require_known(p, {"omega"}, "rotation");
  const double w = param(p, "omega", 1.0);
  Mat a(2, 2);
  a << 0.0, -w, w, 0.0;
  auto sys = euclidean_orthant(
      "rotation", 2,
      [w](std::span<const double> x, std::span<double> out) {
        out[0] = -w * x[1];
        out[1] = w * x[0];
      },
      [a](const Vec&) { return a; }, square(2, -1.0, 1.0));
  sys.declared.h1 = sys.declared.h2 = sys.declared.h3 = true;
  return sys;
}

SystemSpec bistable_tanh(const Params& p) {
  require_known(p, {"gain"}, "bistable_tanh");
  const double g = param(p, "gain", 2.0);
  if (!(g > 0.0)) throw ArgumentError("bistable_tanh needs gain > 0");
  auto sys = euclidean_orthant(
      "bistable_tanh", 2,
      [g](std::span<const double> x, std::span<double> out) {
        out[0] = -x[0] + std::tanh(g * x[1]);
        out[1] = -x[1] + std::tanh(g * x[0]);
      },
      [g](const Vec& x) {
        Mat j(2, 2);
        j << -1.0, g * sech2(g * x[1]), g * sech2(g * x[0]), -1.0;
        return j;
      },
      square(2, -2.0, 2.0));
  sys.declared.dp = sys.declared.sdp = true;
  sys.declared.h1 = sys.declared.h2 = sys.declared.h3 = true;
  return sys;
}

SystemSpec coop_lotka_volterra(const Params& p) {
  require_known(p, {"r1", "r2", "a12", "a21"}, "coop_lotka_volterra");
  const double r1 = param(p, "r1", 1.0), r2 = param(p, "r2", 1.0);
  const double a12 = param(p, "a12", 0.5), a21 = param(p, "a21", 0.5);
  if (a12 < 0.0 || a21 < 0.0) throw ArgumentError("coop_lotka_volterra needs a12, a21 >= 0");
  auto sys = euclidean_orthant(
      "coop_lotka_volterra", 2,
      [=](std::span<const double> x, std::span<double> out) {
        out[0] = x[0] * (r1 - x[0] + a12 * x[1]);
        out[1] = x[1] * (r2 - x[1] + a21 * x[0]);
      },
      [=](const Vec& x) {
        Mat j(2, 2);
        j << r1 - 2.0 * x[0] + a12 * x[1], a12 * x[0], a21 * x[1], r2 - 2.0 * x[1] + a21 * x[0];
        return j;
      },
      Box{Vec::Constant(2, 0.05), Vec::Constant(2, 4.0)});
  sys.declared.dp = true;
  sys.declared.sdp = a12 > 0.0 && a21 > 0.0;
  sys.declared.h1 = sys.declared.h2 = sys.declared.h3 = true;
  return sys;
}

SystemSpec spd_geodesic_relax(const Params& p) {
  require_known(p, {"n", "p"}, "spd_geodesic_relax");
  const int n = static_cast<int>(param(p, "n", 2.0));
  const double scale = param(p, "p", 1.0);
  if (n < 1 || n > 8) throw ArgumentError("spd_geodesic_relax needs 1 <= n <= 8");
  if (!(scale > 0.0)) throw ArgumentError("spd_geodesic_relax needs p > 0");
  const Mat target = scale * Mat::Identity(n, n);
  const int d = spd::chart_dim(n);
  Manifold m = Manifold::spd(n);
  const Point base{spd::to_coords(Mat::Identity(n, n))};
  ConeField field = ConeField::transported(m, base, ConeSpec::psd(n), TransportMap::spd_congruence());
  VectorField f = [n, target](std::span<const double> x, std::span<double> out) {
    const Mat xm = spd::to_matrix(Eigen::Map<const Vec>(x.data(), x.size()), n);
    const Mat half = spd::sqrtm(xm);
    const Mat ihalf = spd::inv_sqrtm(xm);
    const Mat v = half * spd::logm(ihalf * target * ihalf) * half;
    const Vec c = spd::to_coords(v);
    for (int i = 0; i < c.size(); ++i) out[i] = c[i];
  };
  Box region{Vec::Zero(d), Vec::Zero(d)};
  for (int i = 0, k = 0; i < n; ++i) {
    for (int j = i; j < n; ++j, ++k) {
      region.lower[k] = i == j ? 0.1 : -0.5;
      region.upper[k] = i == j ? 3.0 : 0.5;
    }
  }
  SystemSpec sys{"spd_geodesic_relax", std::move(m), std::move(field), std::move(f), {}, {}, region};
  sys.declared.dp = true;
  sys.declared.h1 = sys.declared.h2 = sys.declared.h3 = true;
  return sys;
}

SystemSpec tristable_tanh(const Params& p) {
  require_known(p, {"gain", "c"}, "tristable_tanh");
  const double g = param(p, "gain", 4.0), c = param(p, "c", 1.0);
  if (!(g > 0.0)) throw ArgumentError("tristable_tanh needs gain > 0");
  auto h = [g, c](double u) { return std::tanh(g * (u - c)) + std::tanh(g * (u + c)); };
  auto dh = [g, c](double u) { return g * (sech2(g * (u - c)) + sech2(g * (u + c))); };
  auto sys = euclidean_orthant(
      "tristable_tanh", 2,
      [h](std::span<const double> x, std::span<double> out) {
        out[0] = -x[0] + h(x[1]);
        out[1] = -x[1] + h(x[0]);
      },
      [dh](const Vec& x) {
        Mat j(2, 2);
        j << -1.0, dh(x[1]), dh(x[0]), -1.0;
        return j;
      },
      square(2, -3.0, 3.0));
  sys.declared.dp = sys.declared.sdp = true;
  sys.declared.h1 = sys.declared.h2 = sys.declared.h3 = true;
  return sys;
}

SystemSpec decay(const Params& p) {
  require_known(p, {"dim", "rate"}, "decay");
  const int n = static_cast<int>(param(p, "dim", 1.0));
  const double k = param(p, "rate", 1.0);
  if (n < 1) throw ArgumentError("decay needs dim >= 1");
  auto sys = euclidean_orthant(
      "decay", n,
      [k](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = -k * x[i];
      },
      [k, n](const Vec&) { return Mat(-k * Mat::Identity(n, n)); }, square(n, -2.0, 2.0));
  sys.declared.dp = true;
  sys.declared.h1 = sys.declared.h2 = sys.declared.h3 = true;
  return sys;
}

SystemSpec builtin(const std::string& name, const Params& p) {
  if (name == "linear_metzler") return linear_metzler(p);
  if (name == "rotation") return rotation(p);
  if (name == "bistable_tanh") return bistable_tanh(p);
  if (name == "coop_lotka_volterra") return coop_lotka_volterra(p);
  if (name == "spd_geodesic_relax") return spd_geodesic_relax(p);
  if (name == "tristable_tanh") return tristable_tanh(p);
  if (name == "decay") return decay(p);
  throw ArgumentError("unknown system '" + name + "'");
}

std::vector<std::string> builtin_names() {
  return {"bistable_tanh",   "coop_lotka_volterra", "decay", "linear_metzler",
          "rotation",        "spd_geodesic_relax",  "tristable_tanh"};
}

}  // namespace dpflow::systems
