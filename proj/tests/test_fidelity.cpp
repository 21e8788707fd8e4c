// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "uniloss/fidelity.hpp"

using namespace uniloss;

TEST_CASE("spearman rank correlation") {
    SUBCASE("perfect monotone agreement") {
        CHECK(fidelity::spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
        CHECK(fidelity::spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    }
    SUBCASE("hand-computed with ties") {
        // ranks a: {1, 2.5, 2.5, 4}, b: {2, 1, 3, 4} -> rho = 0.632455...
        // (Pearson over fractional ranks, computed by hand)
        CHECK(fidelity::spearman({1, 2, 2, 3}, {5, 1, 7, 9}) ==
              doctest::Approx(0.6324555320336759).epsilon(1e-12));
    }
    SUBCASE("constant input yields 0 by definition") {
        CHECK(fidelity::spearman({1, 1, 1}, {1, 2, 3}) == 0.0);
    }
    SUBCASE("nonlinear but monotone stays 1") {
        CHECK(fidelity::spearman({1, 2, 3}, {1, 8, 27}) == doctest::Approx(1.0));
    }
}

TEST_CASE("fidelity sweep on a small multiclass model") {
    const data::Dataset ds = data::gen_digits(400, 7);
    train::RunConfig cfg;
    cfg.task = train::TaskKind::multiclass;
    cfg.loss = train::LossKind::uniloss;
    cfg.classes = 10;
    cfg.batch_size = 64;
    cfg.hidden = {32};
    cfg.epochs = 2;
    cfg.anchors.count_per_type = 8;
    const data::Dataset val = data::gen_digits(80, 8);
    const train::TrainResult res = train::train(cfg, ds, val);
    REQUIRE(!res.diverged);

    const std::vector<double> fractions = {0.0, 1.0 / 32, 0.5};
    const fidelity::FidelityReport report =
        fidelity::run_fidelity(res.model, ds, cfg, fractions, 64, 3);

    REQUIRE(report.rows.size() == 3);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].samples == 64);
        CHECK(report.rows[i].rank_correlation >= -1.0);
        CHECK(report.rows[i].rank_correlation <= 1.0);
        CHECK(report.rows[i].mean_l2 >= 0.0);
        if (i > 0) CHECK(report.rows[i].fraction > report.rows[i - 1].fraction);
    }
    // near configurations track the metric far better than distant ones
    CHECK(report.rows.front().rank_correlation > report.rows.back().rank_correlation);

    SUBCASE("csv dump") {
        const auto path =
            (std::filesystem::temp_directory_path() / "uniloss-fid-test.csv").string();
        fidelity::write_csv(path, report);
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "fraction,mean_l2,rank_correlation,samples");
        std::filesystem::remove(path);
    }
}

TEST_CASE("fidelity is deterministic per seed") {
    const data::Dataset ds = data::gen_digits(200, 17);
    train::RunConfig cfg;
    cfg.task = train::TaskKind::multiclass;
    cfg.loss = train::LossKind::uniloss;
    cfg.batch_size = 64;
    cfg.hidden = {16};
    Rng rng(1);
    train::Trainer t(cfg, ds.input_dim);
    const auto a = fidelity::run_fidelity(t.model(), ds, cfg, {0.0, 0.5}, 32, 5);
    const auto b = fidelity::run_fidelity(t.model(), ds, cfg, {0.0, 0.5}, 32, 5);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mean_l2 == b.rows[i].mean_l2);
        CHECK(a.rows[i].rank_correlation == b.rows[i].rank_correlation);
    }
}
