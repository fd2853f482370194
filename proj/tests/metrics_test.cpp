#include <cmath>
#include <numeric>

#include "doctest.h"
#include "legnn/metrics.hpp"
#include "legnn/rng.hpp"
#include "support/fixtures.hpp"

using namespace legnn;

namespace {

// brute-force confusion-matrix oracle
struct Confusion {
  std::vector<std::vector<std::size_t>> m;  // m[truth][pred]
  explicit Confusion(std::size_t c) : m(c, std::vector<std::size_t>(c, 0)) {}
  void add(std::size_t truth, std::size_t pred) { m[truth][pred]++; }

  double accuracy() const {
    std::size_t hit = 0, total = 0;
    for (std::size_t t = 0; t < m.size(); ++t) {
      for (std::size_t p = 0; p < m.size(); ++p) {
        total += m[t][p];
        if (t == p) hit += m[t][p];
      }
    }
    return static_cast<double>(hit) / static_cast<double>(total);
  }

  double macro_f1() const {
    double total = 0.0;
    for (std::size_t c = 0; c < m.size(); ++c) {
      std::size_t tp = m[c][c], fp = 0, fn = 0;
      for (std::size_t o = 0; o < m.size(); ++o) {
        if (o == c) continue;
        fp += m[o][c];
        fn += m[c][o];
      }
      const double denom = static_cast<double>(2 * tp + fp + fn);
      total += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    }
    return total / static_cast<double>(m.size());
  }
};

}  // namespace

TEST_CASE("accuracy closed forms") {
  CHECK(accuracy({1, 2, 3}, {1, 2, 3}) == 1.0);
  CHECK(accuracy({1, 2, 3}, {2, 3, 1}) == 0.0);
  CHECK(accuracy({1, 2, 3, 4}, {1, 2, 3, 0}) == 0.75);
  CHECK_THROWS_AS(accuracy({}, {}), ContractError);
  CHECK_THROWS_AS(accuracy({1}, {1, 2}), ContractError);
}

TEST_CASE("the match predicate is symmetric") {
  Rng rng(101);
  std::vector<std::size_t> a(20), b(20);
  for (std::size_t i = 0; i < 20; ++i) {
    a[i] = rng.uniform_index(4);
    b[i] = rng.uniform_index(4);
  }
  CHECK(accuracy(a, b) == accuracy(b, a));
}

TEST_CASE("macro_f1 closed forms") {
  // perfect prediction, all classes present
  CHECK(macro_f1({0, 1, 2, 0, 1, 2}, {0, 1, 2, 0, 1, 2}, 3) == 1.0);

  // symmetric 2x2 confusion TP=1 FP=1 FN=1 TN=1 per class -> macro 0.5
  CHECK(macro_f1({0, 0, 1, 1}, {0, 1, 0, 1}, 2) == doctest::Approx(0.5));

  // constant class-0 prediction on balanced data -> (2/3 + 0)/2 = 1/3
  CHECK(macro_f1({0, 0, 0, 0}, {0, 0, 1, 1}, 2) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("property: accuracy and macro_f1 match the confusion oracle, 1000 draws") {
  Rng rng(102);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t c = 2 + rng.uniform_index(4);   // C <= 5
    const std::size_t n = 1 + rng.uniform_index(50);  // n <= 50
    std::vector<std::size_t> truth(n), pred(n);
    Confusion oracle(c);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng.uniform_index(c);
      pred[i] = rng.uniform_index(c);
      oracle.add(truth[i], pred[i]);
    }
    REQUIRE(accuracy(pred, truth) == oracle.accuracy());
    REQUIRE(macro_f1(pred, truth, c) == oracle.macro_f1());
  }
}

TEST_CASE("evaluate keeps macro_f1 equal to the mean of per-class f1") {
  Rng rng(103);
  std::vector<std::size_t> truth(30), pred(30);
  for (std::size_t i = 0; i < 30; ++i) {
    truth[i] = rng.uniform_index(4);
    pred[i] = rng.uniform_index(4);
  }
  EvalReport r = evaluate(pred, truth, 4);
  double mean = 0.0;
  for (const ClassScores& s : r.per_class) mean += s.f1;
  mean /= 4.0;
  CHECK(r.macro_f1 == doctest::Approx(mean).epsilon(1e-15));
}

TEST_CASE("label_difference closed forms") {
  // identical members -> 0
  Tensor z1(3, 2, {1.0, 2.0, 1.0, 2.0, 5.0, 5.0});
  CHECK(label_difference(z1, {0, 1}) == 0.0);

  // two members (0,0), (2,0): centroid (1,0), mean distance 1
  Tensor z2(2, 2, {0.0, 0.0, 2.0, 0.0});
  CHECK(label_difference(z2, {0, 1}) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(label_difference(z2, {}), ContractError);
}

TEST_CASE("label_difference is translation invariant") {
  Rng rng(104);
  Tensor z(6, 3);
  for (std::size_t i = 0; i < z.size(); ++i) z.values_mut()[i] = rng.normal();
  std::vector<std::size_t> members{0, 2, 3, 5};
  const double before = label_difference(z, members);

  Tensor shifted = z.clone();
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      shifted.set(r, c, shifted.at(r, c) + (c + 1) * 10.0);
    }
  }
  CHECK(label_difference(shifted, members) ==
        doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("graph_difference: mean over populated classes, scaling, invariance") {
  // class 0 has LD 1.0 (rows 0,1), class 1 has LD 3.0 (rows 2,3)
  Tensor z(4, 2, {0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 6.0, 0.0});
  Tensor y(4, 3);
  y.set(0, 0, 1.0);
  y.set(1, 0, 1.0);
  y.set(2, 1, 1.0);
  y.set(3, 1, 1.0);  // class 2 empty and skipped
  std::vector<std::size_t> nodes{0, 1, 2, 3};
  CHECK(graph_difference(z, y, nodes) == doctest::Approx(2.0).epsilon(1e-14));

  // single class, identical vectors -> 0
  Tensor z0(2, 2, {1.0, 1.0, 1.0, 1.0});
  Tensor y0(2, 1, {1.0, 1.0});
  CHECK(graph_difference(z0, y0, {0, 1}) == 0.0);

  // positive homogeneity: GD(k z) = k GD(z)
  Tensor z3 = z.clone();
  for (std::size_t i = 0; i < z3.size(); ++i) z3.values_mut()[i] *= 2.5;
  CHECK(graph_difference(z3, y, nodes) ==
        doctest::Approx(2.5 * 2.0).epsilon(1e-12));

  // node-order permutation invariance
  std::vector<std::size_t> shuffled{3, 0, 2, 1};
  CHECK(graph_difference(z, y, shuffled) ==
        doctest::Approx(graph_difference(z, y, nodes)).epsilon(1e-15));

  // translation invariance: a constant shift of every row leaves GD alone
  Tensor z_shift = z.clone();
  for (std::size_t r = 0; r < z_shift.rows(); ++r) {
    for (std::size_t c = 0; c < z_shift.cols(); ++c) {
      z_shift.set(r, c, z_shift.at(r, c) - 7.25);
    }
  }
  CHECK(graph_difference(z_shift, y, nodes) ==
        doctest::Approx(graph_difference(z, y, nodes)).epsilon(1e-12));

  Tensor y_none(4, 2);
  CHECK_THROWS_AS(graph_difference(z, y_none, nodes), ContractError);
}

TEST_CASE("pseudo_label_accuracy: buckets partition U'") {
  Graph g = testing::separable_graph(6, 105);  // labels known everywhere
  PseudoState pseudo;
  Rng rng(106);
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    pseudo.nodes.push_back(v);
    // half correct, half wrong
    const int truth = g.label_of(v);
    pseudo.labels.push_back(v % 2 == 0 ? static_cast<std::size_t>(truth)
                                       : static_cast<std::size_t>(1 - truth));
    pseudo.confidence.push_back(0.5 + 0.5 * rng.uniform());
  }
  auto report = pseudo_label_accuracy(pseudo, g);
  REQUIRE(report.has_value());
  CHECK(report->overall == doctest::Approx(0.5));
  std::size_t total = 0;
  for (std::size_t b = 0; b < 10; ++b) total += report->bucket_total[b];
  CHECK(total == pseudo.size());

  // perfect pseudo labels -> 1.0
  PseudoState perfect;
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    perfect.nodes.push_back(v);
    perfect.labels.push_back(static_cast<std::size_t>(g.label_of(v)));
    perfect.confidence.push_back(0.91);
  }
  CHECK(pseudo_label_accuracy(perfect, g)->overall == 1.0);

  // empty U' -> absent, not zero
  CHECK_FALSE(pseudo_label_accuracy(PseudoState{}, g).has_value());
}
