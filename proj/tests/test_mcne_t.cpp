#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mcne/core_math.hpp"
#include "mcne/eval.hpp"
#include "mcne/mcne_t.hpp"
#include "test_util.hpp"

using namespace mcne;
using mcne::testing::random_matrix;

namespace {

Graph make_graph(std::size_t n, std::vector<NodePair> edges) { return Graph(n, edges); }

Graph two_cliques(std::size_t size) {
  std::vector<NodePair> edges;
  for (NodeId base : {NodeId{0}, static_cast<NodeId>(size)})
    for (NodeId u = 0; u < size; ++u)
      for (NodeId v = u + 1; v < size; ++v) edges.push_back({base + u, base + v});
  edges.push_back({0, static_cast<NodeId>(size)});
  return Graph(2 * size, edges);
}

TrainConfig small_config() {
  TrainConfig c;
  c.layout = CodeLayout::multi_hot(4, 2);
  c.dim = 4;
  c.input_dim = 3;
  c.gcn_hidden = 5;
  c.batch_size = 6;
  c.epochs = 5;
  c.learning_rate = 0.01;
  return c;
}

}  // namespace

TEST_CASE("gcn_forward closed forms") {
  Rng rng(1);
  const TrainConfig c = small_config();
  SUBCASE("edgeless graph reduces to a per-node MLP") {
    const Graph g(4, std::vector<NodePair>{});
    const auto model = init_mcne_t(g, c, rng);
    auto expected = model.input;
    for (const auto& w : model.gcn_weights) {
      expected = matmul(expected, w);
      for (double& x : expected.data()) x = std::tanh(x);
    }
    const auto got = gcn_forward(model);
    for (std::size_t i = 0; i < got.data().size(); ++i)
      CHECK(got.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-12));
  }
  SUBCASE("zero weights give zero output") {
    const Graph g = make_graph(4, {{0, 1}, {1, 2}});
    auto model = init_mcne_t(g, c, rng);
    for (auto& w : model.gcn_weights) w.fill(0.0);
    const auto z = gcn_forward(model);
    for (double x : z.data()) CHECK(x == 0.0);
  }
  SUBCASE("adding an edge changes the latent rows of its endpoints") {
    const Graph g1 = make_graph(5, {{0, 1}, {2, 3}});
    const Graph g2 = make_graph(5, {{0, 1}, {2, 3}, {1, 2}});
    Rng r1(9), r2(9);
    const auto m1 = init_mcne_t(g1, c, r1);
    auto m2 = init_mcne_t(g2, c, r2);
    REQUIRE(m1.input == m2.input);
    const auto z1 = gcn_forward(m1);
    const auto z2 = gcn_forward(m2);
    CHECK(!std::equal(z1.row(1).begin(), z1.row(1).end(), z2.row(1).begin()));
    CHECK(std::equal(z1.row(4).begin(), z1.row(4).end(), z2.row(4).begin()));
  }
}

TEST_CASE("sample_triplets") {
  Rng rng(2);
  SUBCASE("path 0-1-2: node 1 is adjacent to everything else and is skipped") {
    const Graph g = make_graph(3, {{0, 1}, {1, 2}});
    const std::vector<NodeId> anchors{0, 1, 2};
    TripletStats stats;
    const auto t = sample_triplets(g, anchors, rng, &stats);
    REQUIRE(t.size() == 2);
    CHECK(t[0].anchor == 0);
    CHECK(t[0].positive == 1);
    CHECK(t[0].negative == 2);
    CHECK(t[1].anchor == 2);
    CHECK(t[1].negative == 0);
    CHECK(stats.skipped_saturated == 1);
    CHECK(stats.skipped_isolated == 0);
  }
  SUBCASE("star plus an isolated node forces the negative") {
    const Graph g = make_graph(7, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
    const std::vector<NodeId> anchors{0, 6};
    TripletStats stats;
    for (int i = 0; i < 20; ++i) {
      const auto t = sample_triplets(g, anchors, rng, &stats);
      REQUIRE(t.size() == 1);
      CHECK(t[0].negative == 6);
      CHECK(t[0].positive >= 1);
      CHECK(t[0].positive <= 5);
    }
    CHECK(stats.skipped_isolated == 20);
  }
  SUBCASE("membership on a random graph") {
    const std::vector<std::size_t> blocks{15, 15};
    const auto sbm = generate_sbm(blocks, 0.4, 0.05, 3);
    std::vector<NodeId> anchors(30);
    for (NodeId i = 0; i < 30; ++i) anchors[i] = i;
    for (const auto& t : sample_triplets(sbm.graph, anchors, rng)) {
      CHECK(sbm.graph.has_edge(t.anchor, t.positive));
      CHECK(!sbm.graph.has_edge(t.anchor, t.negative));
      CHECK(t.negative != t.anchor);
    }
  }
}

TEST_CASE("loss_topology values and gradients") {
  const std::vector<double> e1{1, 0}, e2{0, 1};
  CHECK(loss_topology(e1, e1, e2) == doctest::Approx(0.31326168751822286).epsilon(1e-12));
  CHECK(loss_topology(e1, e2, e1) == doctest::Approx(1.3132616875182228).epsilon(1e-12));
  CHECK(loss_topology(e1, e1, e1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Stable for large margins.
  const std::vector<double> big{1000, 0}, neg_big{-1000, 0};
  CHECK(std::isfinite(loss_topology(big, neg_big, big)));
  CHECK(loss_topology(big, neg_big, big) == doctest::Approx(2e6));
  CHECK(loss_topology(big, big, neg_big) == 0.0);

  Rng rng(3);
  std::vector<double> a(4), p(4), n(4);
  for (auto* v : {&a, &p, &n})
    for (double& x : *v) x = rng.uniform(-1, 1);
  TopologyGrads g;
  loss_topology(a, p, n, &g);
  std::vector<double> point;
  for (auto* v : {&a, &p, &n}) point.insert(point.end(), v->begin(), v->end());
  std::vector<double> grad;
  for (auto* v : {&g.d_anchor, &g.d_positive, &g.d_negative}) grad.insert(grad.end(), v->begin(), v->end());
  const double err = grad_check(
      [](std::span<const double> x) {
        return loss_topology(x.subspan(0, 4), x.subspan(4, 4), x.subspan(8, 4));
      },
      grad, point);
  CHECK(err < 1e-6);
}

TEST_CASE("combined loss gradient passes finite differences") {
  Rng rng(4);
  const Graph g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {0, 3}});
  const TrainConfig c = small_config();
  auto model = init_mcne_t(g, c, rng);
  model.compressor.b_c = random_matrix(1, 8, rng, 0.3);
  const std::vector<NodeId> anchors{0, 2, 4, 5};
  const auto triplets = sample_triplets(g, anchors, rng);
  REQUIRE(!triplets.empty());
  const auto noise = sample_standard_gumbel(6, 8, rng);
  for (double beta : {0.0, 0.3, 2.0}) {
    CAPTURE(beta);
    std::vector<DenseMatrix> grads;
    loss_combined(model, anchors, triplets, noise, 0.7, beta, &grads);
    const double err = mcne::testing::check_param_grads(
        model.parameters(), grads,
        [&] { return loss_combined(model, anchors, triplets, noise, 0.7, beta).combined; });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("combined loss composition") {
  Rng rng(5);
  const Graph g = make_graph(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}});
  const TrainConfig c = small_config();
  auto model = init_mcne_t(g, c, rng);
  const std::vector<NodeId> anchors{0, 1, 2, 3};
  const auto triplets = sample_triplets(g, anchors, rng);
  const auto noise = sample_standard_gumbel(6, 8, rng);
  const auto zero_beta = loss_combined(model, anchors, triplets, noise, 1.0, 0.0);
  CHECK(zero_beta.combined == zero_beta.topology);
  const auto with_beta = loss_combined(model, anchors, triplets, noise, 1.0, 0.5);
  CHECK(with_beta.combined == doctest::Approx(with_beta.topology + 0.5 * with_beta.reconstruction));
  CHECK(with_beta.reconstruction == zero_beta.reconstruction);

  // Single basis vector equal to every latent row makes reconstruction exact.
  TrainConfig one = c;
  one.layout = CodeLayout::multi_hot(1, 1);
  one.gcn_layers = 1;
  auto m = init_mcne_t(g, one, rng);
  for (auto& w : m.gcn_weights) w.fill(0.0);
  m.compressor.basis.fill(0.0);
  const auto r = loss_combined(m, anchors, triplets, DenseMatrix(6, 1), 1.0, 1.0);
  CHECK(r.reconstruction == 0.0);
}

TEST_CASE("export matches hard forward and reconstruction") {
  Rng rng(6);
  const Graph g = two_cliques(5);
  TrainConfig c = small_config();
  auto model = init_mcne_t(g, c, rng);
  const auto cb = export_codebook(model);
  CHECK(cb.node_count() == 10);
  CHECK_NOTHROW(cb.validate());
  const auto hard = hard_forward(model);
  CHECK(hard == reconstruct_all(cb));
  for (std::size_t v = 0; v < 10; ++v) {
    const auto row = reconstruct_from_codebook(cb, v);
    CHECK(std::equal(row.begin(), row.end(), hard.row(v).begin()));
  }
}

TEST_CASE("train_mcne_t") {
  const Graph g = two_cliques(8);
  TrainConfig c;
  c.layout = CodeLayout::multi_hot(32, 4);
  c.dim = 32;
  c.gcn_hidden = 64;
  c.batch_size = 4;
  c.learning_rate = 0.05;
  c.epochs = 0;
  const auto untrained = train_mcne_t(g, c);
  CHECK(untrained.log.empty());
  Rng init_rng(derive_seed(c.seed, 0x1417));
  CHECK(untrained.model.input == init_mcne_t(g, c, init_rng).input);

  c.epochs = 200;
  const auto result = train_mcne_t(g, c);
  REQUIRE(result.log.size() == 200);
  for (const auto& e : result.log) {
    CHECK(result.log[result.best_epoch].combined <= e.combined);
    CHECK(e.tau == anneal_tau(c.tau, e.epoch));
  }
  CHECK(result.embeddings.matrix == hard_forward(result.model));
  CHECK(result.embeddings.matrix == reconstruct_all(result.codebook));

  // Intra-clique hard embeddings are more similar than cross-clique ones.
  double intra = 0.0, cross = 0.0;
  std::size_t ni = 0, nc = 0;
  for (std::size_t u = 0; u < 16; ++u)
    for (std::size_t v = u + 1; v < 16; ++v) {
      const double s = cosine_similarity(result.embeddings.row(u), result.embeddings.row(v));
      if ((u < 8) == (v < 8)) {
        intra += s;
        ++ni;
      } else {
        cross += s;
        ++nc;
      }
    }
  CHECK(intra / ni > cross / nc);

  const auto again = train_mcne_t(g, c);
  CHECK(again.codebook == result.codebook);

  CHECK_THROWS(train_mcne_t(Graph(4, std::vector<NodePair>{}), c));
  c.dim = 0;
  CHECK_THROWS(train_mcne_t(g, c));
}
