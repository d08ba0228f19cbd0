#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "reidbench/error.hpp"
#include "reidbench/standard_eval.hpp"
#include "synthetic.hpp"

using namespace reidbench;

namespace {

RankingResult ranking_with(std::vector<bool> matches) {
  RankingResult r;
  r.query_id = "q";
  r.matches = std::move(matches);
  r.gallery_indices.resize(r.matches.size());
  std::iota(r.gallery_indices.begin(), r.gallery_indices.end(), 0);
  r.scores.assign(r.matches.size(), 0.5);
  return r;
}

}  // namespace

TEST_CASE("similarity basics") {
  const std::vector<float> x{1, 0}, y{0, 1}, nx{-1, 0}, z{0, 0}, w{1, 0, 0};
  CHECK(similarity(x, x, SimilarityMetric::kCosine) == 1.0);
  CHECK(similarity(x, nx, SimilarityMetric::kCosine) == 0.0);
  CHECK(similarity(x, y, SimilarityMetric::kCosine) == 0.5);
  CHECK(similarity(x, x, SimilarityMetric::kEuclidean) == 1.0);
  CHECK(similarity(x, nx, SimilarityMetric::kEuclidean) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(similarity(x, w, SimilarityMetric::kCosine), Error);
  try {
    similarity(x, z, SimilarityMetric::kCosine);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kZeroVector);
  }
}

TEST_CASE("self-similarity is exactly one for arbitrary vectors") {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n;
  for (int i = 0; i < 200; ++i) {
    std::vector<float> v(16);
    for (auto& x : v) x = n(rng);
    CHECK(similarity(v, v, SimilarityMetric::kCosine) == 1.0);
  }
}

TEST_CASE("cosine scores are invariant to positive rescaling") {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n;
  for (int i = 0; i < 100; ++i) {
    std::vector<float> u(8), v(8);
    for (auto& x : u) x = n(rng);
    for (auto& x : v) x = n(rng);
    auto u4 = u;
    for (auto& x : u4) x *= 4.0f;  // power of two: exact in float
    CHECK(similarity(u4, v, SimilarityMetric::kCosine) == similarity(u, v, SimilarityMetric::kCosine));
  }
}

TEST_CASE("rank_gallery filters same identity and camera") {
  const ImageRecord q{"q", 1, 0, Split::kQuery, 0};
  const std::vector<ImageRecord> g{{"g1", 1, 1, Split::kGallery, 1}, {"g2", 1, 0, Split::kGallery, 2},
                                   {"g3", 2, 0, Split::kGallery, 3}};
  const std::vector<double> scores{0.2, 0.9, 0.5};
  const auto r = rank_gallery(scores, q, g);
  CHECK(r.gallery_indices == std::vector<std::size_t>{2, 0});
  CHECK(r.matches == std::vector<bool>{false, true});
  CHECK(first_match_rank(r) == 2);

  const std::vector<ImageRecord> only_same{{"g", 1, 0, Split::kGallery, 1}};
  try {
    rank_gallery(std::vector<double>{0.3}, q, only_same);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyGalleryAfterFilter);
  }
}

TEST_CASE("rank_gallery ties fall back to gallery order") {
  const ImageRecord q{"q", 1, 0, Split::kQuery, 0};
  std::vector<ImageRecord> g;
  for (int i = 0; i < 6; ++i) g.push_back({"g" + std::to_string(i), i, 1, Split::kGallery, std::uint32_t(i + 1)});
  const auto r = rank_gallery(std::vector<double>(6, 0.7), q, g);
  CHECK(r.gallery_indices == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("rank_gallery matches an exhaustive sort") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> id(0, 3), cam(0, 2), level(0, 4);
  const ImageRecord q{"q", 0, 0, Split::kQuery, 0};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ImageRecord> g;
    std::vector<double> scores;
    for (int i = 0; i < 10; ++i) {
      g.push_back({"g" + std::to_string(i), id(rng), cam(rng), Split::kGallery, std::uint32_t(i + 1)});
      scores.push_back(level(rng) / 4.0);
    }
    g[0].camera_id = 1;
    // Oracle: all valid (index, score) pairs ordered lexicographically.
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(g[i].identity_id == q.identity_id && g[i].camera_id == q.camera_id)) keyed.push_back({-scores[i], i});
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> expected;
    for (const auto& k : keyed) expected.push_back(k.second);
    CHECK(rank_gallery(scores, q, g).gallery_indices == expected);
  }
}

TEST_CASE("cmc") {
  const std::vector<RankingResult> third{ranking_with({false, false, true, false})};
  CHECK(cmc_at(third, 1) == 0.0);
  CHECK(cmc_at(third, 5) == 1.0);
  CHECK(cmc_at(third, 10) == 1.0);
  const std::vector<RankingResult> perfect{ranking_with({true, false}), ranking_with({true})};
  CHECK(cmc_at(perfect, 1) == 1.0);
  CHECK_THROWS_AS(cmc_at(third, 0), Error);
  const std::vector<RankingResult> none{ranking_with({false, false})};
  CHECK_THROWS_AS(cmc_at(none, 1), Error);
}

TEST_CASE("average precision") {
  CHECK(average_precision(ranking_with({true, false, true, false})) == doctest::Approx(0.5 * (1.0 + 2.0 / 3.0)));
  CHECK(average_precision(ranking_with({true, true, false})) == 1.0);
  CHECK(average_precision(ranking_with({false, false, false, false, true})) == doctest::Approx(0.2));
  try {
    average_precision(ranking_with({false}));
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoMatchInGallery);
  }
}

TEST_CASE("inverse negative penalty") {
  CHECK(inverse_negative_penalty(ranking_with({false, false, false, false, true, true})) == doctest::Approx(1.0 / 3.0));
  CHECK(average_precision(ranking_with({false, false, false, false, true, true})) ==
        doctest::Approx((1.0 / 5.0 + 2.0 / 6.0) / 2.0));
  CHECK(inverse_negative_penalty(ranking_with({true, false, false, true})) == 0.5);
  CHECK(inverse_negative_penalty(ranking_with({true, true, true, false})) == 1.0);
  CHECK(inverse_negative_penalty(ranking_with({true, false})) == 1.0);
}

TEST_CASE("planted and duplicate instances") {
  // Each query has a uniquely closest gallery embedding of its own identity.
  DatasetManifest m{"planted", {}};
  std::vector<std::vector<float>> rows;
  for (int id = 0; id < 5; ++id) {
    std::vector<float> e(5, 0.0f);
    e[id] = 1.0f;
    m.records.push_back({"q" + std::to_string(id), id, 0, Split::kQuery, std::uint32_t(rows.size())});
    rows.push_back(e);
    auto near = e;
    near[(id + 1) % 5] = 0.1f;
    m.records.push_back({"g" + std::to_string(id), id, 1, Split::kGallery, std::uint32_t(rows.size())});
    rows.push_back(near);
  }
  const auto store = EmbeddingStore::from_rows(rows);
  CHECK(evaluate_standard(m, store).rank1 == 1.0);

  // Gallery == queries duplicated across two other cameras.
  DatasetManifest d{"dup", {}};
  std::vector<std::vector<float>> drows;
  std::mt19937_64 rng(4);
  std::normal_distribution<float> n;
  for (int id = 0; id < 6; ++id) {
    std::vector<float> e(8);
    for (auto& x : e) x = n(rng);
    d.records.push_back({"q" + std::to_string(id), id, 0, Split::kQuery, std::uint32_t(drows.size())});
    drows.push_back(e);
    for (int cam = 1; cam <= 2; ++cam) {
      d.records.push_back({"g" + std::to_string(id) + "_" + std::to_string(cam), id, cam, Split::kGallery,
                           std::uint32_t(drows.size())});
      drows.push_back(e);
    }
  }
  const auto dm = evaluate_standard(d, EmbeddingStore::from_rows(drows));
  CHECK(dm.rank1 == 1.0);
  CHECK(dm.map == 1.0);
  CHECK(dm.minp == 1.0);
}

TEST_CASE("evaluate_standard matches the brute-force evaluator") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 80; ++trial) {
    const bool quantized = trial % 2 == 1;
    const auto metric = trial % 3 == 2 ? SimilarityMetric::kEuclidean : SimilarityMetric::kCosine;
    const auto inst = synthetic::random_retrieval(rng, 8, 4, 4, quantized);
    const auto got = evaluate_standard(inst.manifest, inst.store, metric);
    const auto want = oracle::brute_force_standard(inst.manifest, inst.store, metric);
    CHECK(std::abs(got.rank1 - want.rank1) <= 1e-12);
    CHECK(std::abs(got.rank5 - want.rank5) <= 1e-12);
    CHECK(std::abs(got.rank10 - want.rank10) <= 1e-12);
    CHECK(std::abs(got.map - want.map) <= 1e-12);
    CHECK(std::abs(got.minp - want.minp) <= 1e-12);
  }
}

TEST_CASE("metric properties on random instances") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const auto inst = synthetic::random_retrieval(rng, 10, 5, 3, trial % 2 == 0);
    const auto rankings = rank_all(inst.manifest, inst.store, SimilarityMetric::kCosine);
    double prev = 0.0;
    for (std::size_t n = 1; n <= 12; ++n) {
      const double c = cmc_at(rankings, n);
      CHECK(c >= prev);
      prev = c;
    }
    for (const auto& r : rankings) {
      const double ap = average_precision(r);
      const double inp = inverse_negative_penalty(r);
      // Every one of the |G| precision terms i / r_i is at least i / r_worst,
      // so AP >= (|G| + 1) / (2 r_worst) = INP (|G| + 1) / (2 |G|). INP can
      // exceed AP (matches at ranks 5 and 6: AP 0.267, INP 0.333).
      const double g = static_cast<double>(r.match_count());
      CHECK(ap >= inp * (g + 1.0) / (2.0 * g) - 1e-15);
      if (r.match_count() == 1) CHECK(std::abs(ap - inp) <= 1e-15);
      CHECK(ap <= 1.0);
      CHECK(inp <= 1.0);
      CHECK(inp > 0.0);
    }

    // Thread count does not change anything.
    const auto one = evaluate_standard(inst.manifest, inst.store, SimilarityMetric::kCosine, 1);
    const auto four = evaluate_standard(inst.manifest, inst.store, SimilarityMetric::kCosine, 4);
    CHECK(one.rank1 == four.rank1);
    CHECK(one.map == four.map);
    CHECK(one.minp == four.minp);
  }
}

TEST_CASE("metrics are invariant to gallery permutation when scores are distinct") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    auto inst = synthetic::random_retrieval(rng, 8, 4, 6, false);
    const auto before = evaluate_standard(inst.manifest, inst.store);
    std::shuffle(inst.manifest.records.begin(), inst.manifest.records.end(), rng);
    const auto after = evaluate_standard(inst.manifest, inst.store);
    CHECK(std::abs(before.rank1 - after.rank1) <= 1e-12);
    CHECK(std::abs(before.map - after.map) <= 1e-12);
    CHECK(std::abs(before.minp - after.minp) <= 1e-12);
  }
}

TEST_CASE("query without any cross-camera match is reported") {
  DatasetManifest m{"m", {{"q", 1, 0, Split::kQuery, 0}, {"g1", 1, 0, Split::kGallery, 1}, {"g2", 2, 1, Split::kGallery, 2}}};
  const auto store = EmbeddingStore::from_rows({{1, 0}, {1, 0}, {0, 1}});
  try {
    evaluate_standard(m, store);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoMatchInGallery);
  }
}

TEST_CASE("distance matrix rows agree with pairwise similarity") {
  std::mt19937_64 rng(8);
  const auto inst = synthetic::random_retrieval(rng, 6, 3, 5, false);
  const auto q = inst.manifest.split_records(Split::kQuery);
  const auto g = inst.manifest.split_records(Split::kGallery);
  const auto s = distance_matrix(gather_rows(inst.store, q), gather_rows(inst.store, g), SimilarityMetric::kCosine, 3);
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double want = oracle::pair_similarity(inst.store.row(q[i].embedding_idx), inst.store.row(g[j].embedding_idx),
                                                  SimilarityMetric::kCosine);
      CHECK(std::abs(s.at(i, j) - want) <= 1e-12);
    }
  }
}
