#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "mmbeam/dataset.hpp"
#include "mmbeam/rng.hpp"

using namespace mmbeam;

namespace {

GenConfig small_config() {
  GenConfig g;
  g.n_points = 200;
  g.k = 16;
  g.m0 = 8;
  g.n_rx = 16;
  g.impairment = {0.0, 0.0, 1};
  g.rss_snr_db = 200.0;  // effectively noiseless
  g.seed = 11;
  return g;
}

}  // namespace

TEST_CASE("assign_label examples") {
  Eigen::VectorXd v(3);
  v << 0.1, 0.9, 0.3;
  CHECK(assign_label(v) == 1);

  Eigen::VectorXd tie(2);
  tie << 0.5, 0.5;
  CHECK(assign_label(tie) == 0);

  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd r(17);
    for (int i = 0; i < 17; ++i) r(i) = rng.uniform();
    CHECK(r(assign_label(r)) == r.maxCoeff());
  }
}

TEST_CASE("generate_dataset shapes and protocol") {
  const Dataset ds = generate_dataset(small_config());
  REQUIRE(ds.points.size() == 200);
  CHECK(ds.n_labels() == 16);
  for (const auto& pt : ds.points) {
    CHECK(pt.dft_rss.size() == 16);
    CHECK(pt.pn_rss.size() == 8);
    CHECK(pt.label == assign_label(pt.dft_rss));
    CHECK(pt.aoa_true_deg >= -45.0);
    CHECK(pt.aoa_true_deg <= 45.0);
    CHECK(pt.dft_rss.minCoeff() >= 0.0);
    CHECK(pt.pn_rss.minCoeff() >= 0.0);
  }
}

TEST_CASE("full-scale configuration gives 100 RSS values per point") {
  GenConfig g;
  g.n_points = 5;
  g.seed = 3;
  const Dataset ds = generate_dataset(g);
  for (const auto& pt : ds.points)
    CHECK(pt.dft_rss.size() + pt.pn_rss.size() == 100);
}

TEST_CASE("zero impairment, noiseless: label is the nearest grid beam") {
  const Dataset ds = generate_dataset(small_config());
  const Codebook dft = ds.meta.dft();
  for (const auto& pt : ds.points) {
    int nearest = 0;
    for (int i = 1; i < 16; ++i)
      if (std::abs(dft.angles_deg[i] - pt.aoa_true_deg) <
          std::abs(dft.angles_deg[nearest] - pt.aoa_true_deg))
        nearest = i;
    CHECK(std::abs(pt.label - nearest) <= 1);
  }
}

TEST_CASE("label is monotone in AoA for clean data") {
  Dataset ds = generate_dataset(small_config());
  std::sort(ds.points.begin(), ds.points.end(),
            [](const DataPoint& a, const DataPoint& b) {
              return a.aoa_true_deg < b.aoa_true_deg;
            });
  for (std::size_t i = 1; i < ds.points.size(); ++i)
    CHECK(ds.points[i].label >= ds.points[i - 1].label);
}

TEST_CASE("same seed gives byte-identical serialization") {
  const Dataset a = generate_dataset(small_config());
  const Dataset b = generate_dataset(small_config());
  CHECK(dataset_to_jsonl(a) == dataset_to_jsonl(b));

  GenConfig other = small_config();
  other.seed = 12;
  CHECK(dataset_to_jsonl(a) != dataset_to_jsonl(generate_dataset(other)));
}

TEST_CASE("filter_labels") {
  GenConfig g = small_config();
  g.n_points = 400;
  g.aoa_min_deg = -20.0;  // narrow range starves the edge labels
  g.aoa_max_deg = 20.0;
  const Dataset ds = generate_dataset(g);

  SUBCASE("min_count = 1 is the identity when every label is occupied") {
    GenConfig full = small_config();
    full.n_points = 600;
    const Dataset dense = generate_dataset(full);
    std::map<int, long> counts;
    for (const auto& pt : dense.points) ++counts[pt.label];
    REQUIRE(counts.size() == 16);  // seeded draw covers every beam
    const Dataset f = filter_labels(dense, 1);
    CHECK(f.points.size() == dense.points.size());
    CHECK(f.label_map == dense.label_map);
  }
  SUBCASE("surviving labels all meet the threshold, map stays injective") {
    const Dataset f = filter_labels(ds, 10);
    CHECK(f.n_labels() < ds.n_labels());
    CHECK(!f.points.empty());
    std::map<int, long> counts;
    for (const auto& pt : f.points) ++counts[pt.label];
    for (const auto& [label, count] : counts) CHECK(count >= 10);
    std::set<int> originals(f.label_map.begin(), f.label_map.end());
    CHECK(originals.size() == f.label_map.size());
    // dense labels still match the DFT argmax through the map
    for (const auto& pt : f.points)
      CHECK(f.label_map[pt.label] == assign_label(pt.dft_rss));
  }
  SUBCASE("idempotent") {
    const Dataset once = filter_labels(ds, 10);
    const Dataset twice = filter_labels(once, 10);
    CHECK(dataset_to_jsonl(once) == dataset_to_jsonl(twice));
  }
  SUBCASE("unreachable threshold throws") {
    CHECK_THROWS(filter_labels(ds, 100000));
  }
}

TEST_CASE("split is a stratified partition") {
  GenConfig g = small_config();
  g.n_points = 500;
  const Dataset ds = generate_dataset(g);
  const auto [train, test] = split(ds, 0.7, 99);

  SUBCASE("partition") {
    CHECK(train.points.size() + test.points.size() == ds.points.size());
    // membership via unique AoA values (continuous draws collide with
    // probability zero)
    std::set<double> train_aoas, test_aoas;
    for (const auto& pt : train.points) train_aoas.insert(pt.aoa_true_deg);
    for (const auto& pt : test.points) test_aoas.insert(pt.aoa_true_deg);
    CHECK(train_aoas.size() == train.points.size());
    for (double aoa : test_aoas) CHECK(train_aoas.count(aoa) == 0);
  }
  SUBCASE("per-label proportions within one point of the fraction") {
    std::map<int, long> n_train, n_all;
    for (const auto& pt : ds.points) ++n_all[pt.label];
    for (const auto& pt : train.points) ++n_train[pt.label];
    for (const auto& [label, total] : n_all) {
      const double exact = 0.7 * static_cast<double>(total);
      CHECK(std::abs(static_cast<double>(n_train[label]) - exact) <= 1.0);
    }
  }
  SUBCASE("deterministic in the seed") {
    const auto [t2, e2] = split(ds, 0.7, 99);
    CHECK(dataset_to_jsonl(t2) == dataset_to_jsonl(train));
    const auto [t3, e3] = split(ds, 0.7, 100);
    CHECK(dataset_to_jsonl(t3) != dataset_to_jsonl(train));
  }
  SUBCASE("a label with fewer than 2 points cannot stratify") {
    Dataset tiny;
    tiny.meta = ds.meta;
    tiny.label_map = {0, 1};
    tiny.points.resize(3);
    for (auto& pt : tiny.points) {
      pt.dft_rss = Eigen::VectorXd::Zero(ds.meta.k);
      pt.pn_rss = Eigen::VectorXd::Zero(ds.meta.m0);
    }
    tiny.points[0].label = 0;
    tiny.points[1].label = 0;
    tiny.points[2].label = 1;
    CHECK_THROWS(split(tiny, 0.5, 1));
  }
}

TEST_CASE("truncate_features") {
  const Dataset ds = generate_dataset(small_config());
  const DataPoint& pt = ds.points[0];

  CHECK((truncate_features(pt, 8) - pt.pn_rss).norm() == 0.0);
  const Eigen::VectorXd five = truncate_features(pt, 5);
  REQUIRE(five.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(five(i) == pt.pn_rss(i));

  // prefix composition
  DataPoint shorter = pt;
  shorter.pn_rss = truncate_features(pt, 7);
  CHECK((truncate_features(shorter, 5) - truncate_features(pt, 5)).norm() == 0.0);

  CHECK_THROWS_AS(truncate_features(pt, 0), std::invalid_argument);
  CHECK_THROWS_AS(truncate_features(pt, 9), std::invalid_argument);
}

TEST_CASE("save/load round trip") {
  const Dataset ds = generate_dataset(small_config());
  const std::string path = "test_dataset_roundtrip.jsonl";
  save_dataset(ds, path);
  const Dataset back = load_dataset(path);
  CHECK(dataset_to_jsonl(back) == dataset_to_jsonl(ds));
  CHECK(back.meta.seed == ds.meta.seed);
  CHECK(back.meta.sigma_rss == ds.meta.sigma_rss);
  CHECK(back.label_map == ds.label_map);
  std::remove(path.c_str());
}

TEST_CASE("malformed dataset files fail with a line number") {
  const Dataset ds = generate_dataset(small_config());
  std::string text = dataset_to_jsonl(ds);

  SUBCASE("syntax error") {
    const auto pos = text.find('\n', text.find('\n') + 1);
    std::string broken = text.substr(0, pos + 1) + "{not json}\n";
    try {
      dataset_from_jsonl(broken);
      FAIL("expected parse error");
    } catch (const std::runtime_error& err) {
      CHECK(std::string(err.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("vector length mismatch") {
    Dataset bad = ds;
    bad.points[0].pn_rss = Eigen::VectorXd::Zero(3);
    try {
      dataset_from_jsonl(dataset_to_jsonl(bad));
      FAIL("expected length mismatch error");
    } catch (const std::runtime_error& err) {
      CHECK(std::string(err.what()).find("length mismatch") != std::string::npos);
    }
  }
  SUBCASE("label/argmax mismatch") {
    Dataset bad = ds;
    bad.points[0].label = (bad.points[0].label + 1) % 16;
    try {
      dataset_from_jsonl(dataset_to_jsonl(bad));
      FAIL("expected argmax mismatch error");
    } catch (const std::runtime_error& err) {
      CHECK(std::string(err.what()).find("argmax") != std::string::npos);
    }
  }
}
