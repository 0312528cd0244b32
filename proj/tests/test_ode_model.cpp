#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "dscm/error.hpp"
#include "dscm/ode_model.hpp"

using namespace dscm;

namespace {

CausalOde chain2(double b = 0.1) {
  const std::vector<double> m{1.0, 1.0}, d{b, b}, k{1.0, 1.0, 1.0}, l{1.0, 1.0, 1.0};
  return build_mass_spring(2, m, d, k, l, 3.0);
}

const LinearMechanism& linear(const CausalOde& ode, Label label) {
  return std::get<LinearMechanism>(ode.mechanism(label));
}

}  // namespace

TEST_CASE("mass-spring D=2 coefficients", "[ode_model]") {
  const auto ode = chain2();
  const auto& x1 = linear(ode, 1);
  CHECK(x1.stiffness == 2.0);
  CHECK(x1.parent_weights == std::map<Label, double>{{2, 1.0}});
  CHECK(x1.constant == 0.0);
  const auto& x2 = linear(ode, 2);
  CHECK(x2.stiffness == 2.0);
  CHECK(x2.parent_weights == std::map<Label, double>{{1, 1.0}});
  CHECK(x2.constant == 3.0);
}

TEST_CASE("mass-spring with unequal springs follows the chain formula", "[ode_model]") {
  const std::vector<double> m{1.0, 2.0, 3.0}, d{0.1, 0.2, 0.3}, k{1.0, 2.0, 3.0, 4.0},
      l{0.5, 1.5, 2.5, 3.5};
  const double wall = 10.0;
  const auto ode = build_mass_spring(3, m, d, k, l, wall);
  // a_i = k_{i-1} + k_i ; c_i = k_{i-1} l_{i-1} - k_i l_i (+ k_D L)
  CHECK(linear(ode, 1).stiffness == 3.0);
  CHECK(linear(ode, 2).stiffness == 5.0);
  CHECK(linear(ode, 3).stiffness == 7.0);
  CHECK(linear(ode, 1).constant == 1.0 * 0.5 - 2.0 * 1.5);
  CHECK(linear(ode, 2).constant == 2.0 * 1.5 - 3.0 * 2.5);
  CHECK(linear(ode, 3).constant == 3.0 * 2.5 - 4.0 * 3.5 + 4.0 * wall);
  CHECK(linear(ode, 2).parent_weights == std::map<Label, double>{{1, 2.0}, {3, 3.0}});
  CHECK(linear(ode, 2).mass == 2.0);
  CHECK(linear(ode, 3).damping == 0.3);
}

TEST_CASE("mass-spring D=1 has no parents", "[ode_model]") {
  const std::vector<double> m{1.0}, d{0.5}, k{2.0, 3.0}, l{1.0, 1.0};
  const auto ode = build_mass_spring(1, m, d, k, l, 4.0);
  CHECK(ode.size() == 1);
  CHECK(linear(ode, 1).stiffness == 5.0);
  CHECK(linear(ode, 1).parent_weights.empty());
  CHECK(linear(ode, 1).constant == 2.0 * 1.0 - 3.0 * 1.0 + 3.0 * 4.0);
}

TEST_CASE("mass-spring dimension and sign errors", "[ode_model]") {
  const std::vector<double> m{1.0, 1.0}, d{0.1, 0.1}, k{1.0, 1.0, 1.0}, l{1.0, 1.0, 1.0};
  const std::vector<double> short_k{1.0, 1.0};
  CHECK_THROWS_AS(build_mass_spring(2, m, d, short_k, l, 3.0), ValidationError);
  CHECK_THROWS_AS(build_mass_spring(3, m, d, k, l, 3.0), ValidationError);
  const std::vector<double> neg_k{1.0, -1.0, 1.0};
  CHECK_THROWS_AS(build_mass_spring(2, m, d, neg_k, l, 3.0), ValidationError);
  const std::vector<double> zero_m{0.0, 1.0};
  CHECK_THROWS_WITH(build_mass_spring(2, zero_m, d, k, l, 3.0),
                    Catch::Matchers::ContainsSubstring("x1.mass"));
}

TEST_CASE("mechanism validation names the field", "[ode_model]") {
  LinearMechanism bad;
  bad.damping = -1.0;
  CHECK_THROWS_WITH(CausalOde({bad}), Catch::Matchers::ContainsSubstring("x1.damping"));
  LinearMechanism self;
  self.parent_weights[1] = 1.0;
  CHECK_THROWS_WITH(CausalOde({self}), Catch::Matchers::ContainsSubstring("x1.parents"));
  LinearMechanism dangling;
  dangling.parent_weights[5] = 1.0;
  CHECK_THROWS_AS(CausalOde({LinearMechanism{}, dangling}), ValidationError);
  CHECK_THROWS_AS(CausalOde({ClampedMechanism{}}, {InitialCondition{0.0, 0.0}}), ValidationError);
}

TEST_CASE("all springs zero gives decoupled masses", "[ode_model]") {
  const std::vector<double> m{1.0, 2.0, 3.0}, d{0.1, 0.1, 0.1}, k{0.0, 0.0, 0.0, 0.0},
      l{1.0, 1.0, 1.0, 1.0};
  const auto ode = build_mass_spring(3, m, d, k, l, 5.0);
  const auto g = causal_graph(ode);
  for (Label i : ode.labels()) {
    CHECK(linear(ode, i).parent_weights.empty());
    for (Label j : ode.labels()) CHECK(g.has_edge(j, i) == (i == j));
  }
}

TEST_CASE("intervene clamps targets and keeps everything else", "[ode_model]") {
  const auto ode = chain2().with_initial_conditions({{1, {1.0, 0.0}}, {2, {2.0, 0.5}}});
  CHECK(intervene(ode, {}) == ode);

  const auto zeta = QuasiPeriodicSignal::cosine(0.5, 2.0, 0.0, 1.0);  // l_1 + A cos(w t)
  const auto clamped = intervene(ode, {{1, zeta}});
  CHECK(clamped.is_clamped(1));
  CHECK(std::get<ClampedMechanism>(clamped.mechanism(1)).signal == zeta);
  CHECK_FALSE(clamped.initial_condition(1).has_value());
  CHECK(clamped.mechanism(2) == ode.mechanism(2));
  CHECK(clamped.initial_condition(2) == ode.initial_condition(2));

  CHECK(intervene(clamped, {{1, zeta}}) == clamped);
  const auto later = intervene(clamped, {{1, QuasiPeriodicSignal::constant(3.0)}});
  CHECK(std::get<ClampedMechanism>(later.mechanism(1)).signal == QuasiPeriodicSignal::constant(3.0));

  CHECK_THROWS_WITH(intervene(ode, {{3, zeta}}),
                    Catch::Matchers::ContainsSubstring("unknown variable label 3"));
}

TEST_CASE("causal graphs before and after intervention", "[ode_model]") {
  const auto ode = chain2();
  CHECK(causal_graph(ode).to_string() == "1->1 1->2 2->1 2->2");
  CHECK(causal_graph(intervene(ode, {{1, QuasiPeriodicSignal::constant(1.0)}})).to_string() ==
        "1->2 2->2");
  const auto all = intervene(ode, {{1, QuasiPeriodicSignal::constant(1.0)},
                                   {2, QuasiPeriodicSignal::constant(2.0)}});
  CHECK(causal_graph(all).edges.empty());
}

TEST_CASE("property: intervention is graph surgery for every subset", "[ode_model][property]") {
  for (std::size_t d : {2u, 3u}) {
    std::vector<double> m(d, 1.0), b(d, 0.2), k(d + 1, 1.0), l(d + 1, 1.0);
    const auto ode = build_mass_spring(d, m, b, k, l, 4.0);
    const auto before = causal_graph(ode);
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      TrajectoryBundle targets;
      for (Label i = 1; i <= static_cast<Label>(d); ++i) {
        if (mask & (1u << (i - 1))) targets[i] = QuasiPeriodicSignal::constant(i);
      }
      std::set<Edge> expected;
      for (const auto& e : before.edges) {
        if (!targets.contains(e.to)) expected.insert(e);
      }
      INFO("D=" << d << " mask=" << mask);
      CHECK(causal_graph(intervene(ode, targets)).edges == expected);
    }
  }
}

TEST_CASE("property: disjoint interventions compose", "[ode_model][property]") {
  std::vector<double> m(3, 1.0), b(3, 0.2), k(4, 1.0), l(4, 1.0);
  const auto ode = build_mass_spring(3, m, b, k, l, 4.0);
  for (unsigned i_mask = 0; i_mask < 8; ++i_mask) {
    for (unsigned j_mask = 0; j_mask < 8; ++j_mask) {
      if (i_mask & j_mask) continue;
      TrajectoryBundle zi, zj;
      for (Label v = 1; v <= 3; ++v) {
        if (i_mask & (1u << (v - 1))) zi[v] = QuasiPeriodicSignal::cosine(1.0, v, 0.0, v);
        if (j_mask & (1u << (v - 1))) zj[v] = QuasiPeriodicSignal::constant(-v);
      }
      TrajectoryBundle both = zi;
      both.insert(zj.begin(), zj.end());
      CHECK(intervene(intervene(ode, zi), zj) == intervene(ode, both));
    }
  }
}

TEST_CASE("rest positions of the symmetric chain", "[ode_model]") {
  const auto rest = rest_positions(chain2());
  REQUIRE(rest);
  CHECK_THAT((*rest)[0], Catch::Matchers::WithinAbs(1.0, 1e-14));
  CHECK_THAT((*rest)[1], Catch::Matchers::WithinAbs(2.0, 1e-14));
  LinearMechanism free_mass;  // a = 0: no unique rest
  CHECK_FALSE(rest_positions(CausalOde({free_mass})).has_value());
}
