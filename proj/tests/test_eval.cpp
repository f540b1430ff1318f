#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "tscd/eval.hpp"
#include "tscd/rng.hpp"

using namespace tscd;

namespace {

// All-pairs comparison oracle for AUROC, ties counted as half.
double auroc_oracle(const std::vector<double>& s, const std::vector<std::uint8_t>& l) {
    double wins = 0.0;
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!l[i]) continue;
        ++pos;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (l[j]) continue;
            if (s[i] > s[j]) wins += 1.0;
            else if (s[i] == s[j]) wins += 0.5;
        }
    }
    for (auto v : l) neg += v ? 0 : 1;
    return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Threshold-enumeration oracle for average precision.
double auprc_oracle(const std::vector<double>& s, const std::vector<std::uint8_t>& l) {
    std::vector<double> thresholds = s;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    std::size_t positives = 0;
    for (auto v : l) positives += v;
    double ap = 0.0;
    std::size_t prev_tp = 0;
    for (double th : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= th) (l[i] ? tp : fp) += 1;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += precision * static_cast<double>(tp - prev_tp) / static_cast<double>(positives);
        prev_tp = tp;
    }
    return ap;
}

EvalRecord make_record(const std::string& scenario, std::uint64_t seed,
                       const std::string& method, const std::string& config, double roc,
                       double prc) {
    EvalRecord r;
    r.scenario = scenario;
    r.d = 10;
    r.t_len = 1000;
    r.seed = seed;
    r.method = method;
    r.config_id = config;
    r.config_json = "{}";
    r.auroc = roc;
    r.auprc = prc;
    return r;
}

}  // namespace

TEST_CASE("auroc: perfect ranking and total ties") {
    CausalGraph truth(3);
    truth.set_edge(0, 1);
    truth.set_edge(1, 2);
    Matrix scores(3, 3);
    scores(0, 1) = 0.9;
    scores(1, 2) = 0.8;
    scores(1, 0) = 0.1;
    CHECK(auroc(scores, truth) == 1.0);

    Matrix flat(3, 3, 0.5);
    CHECK(auroc(flat, truth) == 0.5);
}

TEST_CASE("auroc: single-class truth is undefined") {
    CausalGraph truth(3);  // no off-diagonal edges
    Matrix scores(3, 3);
    CHECK_THROWS_AS(auroc(scores, truth), UndefinedMetricError);
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t q = 0; q < 3; ++q) truth.set_edge(p, q);
    CHECK_THROWS_AS(auroc(scores, truth), UndefinedMetricError);
}

TEST_CASE("auprc: forced small cases") {
    std::vector<double> s{0.9, 0.1};
    std::vector<std::uint8_t> l{0, 1};  // the positive is ranked second
    CHECK(auprc_pairs(s, l) == doctest::Approx(0.5).epsilon(1e-15));

    std::vector<double> s2{0.9, 0.8, 0.1, 0.2};
    std::vector<std::uint8_t> l2{1, 1, 0, 0};
    CHECK(auprc_pairs(s2, l2) == 1.0);

    std::vector<std::uint8_t> none{0, 0};
    CHECK_THROWS_AS(auprc_pairs(s, none), UndefinedMetricError);
}

TEST_CASE("metrics match brute-force oracles on random instances") {
    Rng rng(20240401);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 90;
        std::vector<double> s(n);
        std::vector<std::uint8_t> l(n);
        const bool tie_heavy = trial % 3 == 0;
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = tie_heavy ? std::floor(rng.uniform() * 4.0) / 4.0 : rng.uniform();
            l[i] = rng.uniform() < 0.2 ? 1 : 0;
            (l[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos) l[0] = 1;
        if (!has_neg) l[1] = 0;
        CHECK(std::abs(auroc_pairs(s, l) - auroc_oracle(s, l)) <= 1e-12);
        CHECK(std::abs(auprc_pairs(s, l) - auprc_oracle(s, l)) <= 1e-12);
    }
}

TEST_CASE("metrics are invariant under strictly increasing transforms") {
    Rng rng(5);
    const std::size_t n = 90;
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.uniform();
        l[i] = i % 7 == 0 ? 1 : 0;
    }
    const double base_roc = auroc_pairs(s, l);
    const double base_prc = auprc_pairs(s, l);

    std::vector<double> expd(n), affine(n);
    for (std::size_t i = 0; i < n; ++i) {
        expd[i] = std::exp(s[i]);
        affine[i] = 3.0 * s[i] + 11.0;
    }
    CHECK(std::abs(auroc_pairs(expd, l) - base_roc) <= 1e-12);
    CHECK(std::abs(auroc_pairs(affine, l) - base_roc) <= 1e-12);
    CHECK(std::abs(auprc_pairs(expd, l) - base_prc) <= 1e-12);
    CHECK(std::abs(auprc_pairs(affine, l) - base_prc) <= 1e-12);
}

TEST_CASE("auroc: negating tie-free scores complements the metric") {
    Rng rng(6);
    const std::size_t n = 60;
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = rng.normal();
        l[i] = i % 5 == 0 ? 1 : 0;
    }
    std::vector<double> neg(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -s[i];
    CHECK(auroc_pairs(s, l) + auroc_pairs(neg, l) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("metrics: duplicating the instance changes nothing") {
    Rng rng(7);
    std::vector<double> s(40);
    std::vector<std::uint8_t> l(40);
    for (std::size_t i = 0; i < 40; ++i) {
        s[i] = std::floor(rng.uniform() * 5.0);
        l[i] = i % 4 == 0 ? 1 : 0;
    }
    std::vector<double> s2 = s;
    s2.insert(s2.end(), s.begin(), s.end());
    std::vector<std::uint8_t> l2 = l;
    l2.insert(l2.end(), l.begin(), l.end());
    CHECK(std::abs(auroc_pairs(s2, l2) - auroc_pairs(s, l)) <= 1e-12);
    CHECK(std::abs(auprc_pairs(s2, l2) - auprc_pairs(s, l)) <= 1e-12);
}

TEST_CASE("aggregate: forced mean and std") {
    std::vector<EvalRecord> records;
    SUBCASE("identical metrics collapse to std 0") {
        for (int s = 0; s < 3; ++s) records.push_back(make_record("vanilla", s, "var", "c0", 1.0, 1.0));
        auto rows = aggregate(records, SelectionMode::best_per_dataset);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].mean_auroc == doctest::Approx(100.0));
        CHECK(rows[0].std_auroc == 0.0);
        CHECK(rows[0].n == 3);
    }
    SUBCASE("single trial reports std 0") {
        records.push_back(make_record("vanilla", 0, "var", "c0", 0.5, 0.5));
        auto rows = aggregate(records, SelectionMode::best_per_dataset);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].mean_auroc == doctest::Approx(50.0));
        CHECK(rows[0].std_auroc == 0.0);
    }
    SUBCASE("sample standard deviation uses n - 1") {
        records.push_back(make_record("vanilla", 0, "var", "c0", 0.1, 0.1));
        records.push_back(make_record("vanilla", 1, "var", "c0", 0.2, 0.2));
        records.push_back(make_record("vanilla", 2, "var", "c0", 0.3, 0.3));
        auto rows = aggregate(records, SelectionMode::best_per_dataset);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].mean_auprc == doctest::Approx(20.0).epsilon(1e-12));
        CHECK(rows[0].std_auprc == doctest::Approx(10.0).epsilon(1e-12));
    }
}

TEST_CASE("select_hyperparams: best per dataset picks the argmax config") {
    std::vector<EvalRecord> records;
    const double auprcs[3] = {0.5, 0.9, 0.7};
    for (int c = 0; c < 3; ++c)
        for (int s = 0; s < 2; ++s)
            records.push_back(
                make_record("vanilla", s, "var", "c" + std::to_string(c), 0.8, auprcs[c]));
    auto kept = select_hyperparams(records, SelectionMode::best_per_dataset);
    REQUIRE(kept.size() == 2);
    for (const auto& r : kept) CHECK(r.config_id == "c1");
}

TEST_CASE("select_hyperparams: single config makes all modes coincide") {
    std::vector<EvalRecord> records;
    for (int s = 0; s < 3; ++s) {
        records.push_back(make_record("vanilla", s, "var", "c0", 0.9, 0.8));
        records.push_back(make_record("mixed", s, "var", "c0", 0.6, 0.4));
    }
    auto a = aggregate(records, SelectionMode::best_per_dataset);
    auto b = aggregate(records, SelectionMode::best_avg_scenarios);
    auto c = aggregate(records, SelectionMode::all_hyper_aggregate);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].mean_auprc == b[i].mean_auprc);
        CHECK(a[i].mean_auprc == c[i].mean_auprc);
    }
}

TEST_CASE("select_hyperparams: best average across scenarios") {
    // Config c0: great on one scenario, poor on the other (mean 0.5).
    // Config c1: middling on both (mean 0.6) -> wins.
    std::vector<EvalRecord> records;
    records.push_back(make_record("vanilla", 0, "var", "c0", 0.9, 0.9));
    records.push_back(make_record("mixed", 0, "var", "c0", 0.1, 0.1));
    records.push_back(make_record("vanilla", 0, "var", "c1", 0.6, 0.6));
    records.push_back(make_record("mixed", 0, "var", "c1", 0.6, 0.6));
    auto kept = select_hyperparams(records, SelectionMode::best_avg_scenarios);
    REQUIRE(kept.size() == 2);
    for (const auto& r : kept) CHECK(r.config_id == "c1");
}

TEST_CASE("select_hyperparams: missing coverage names the hole") {
    std::vector<EvalRecord> records;
    records.push_back(make_record("vanilla", 0, "var", "c0", 0.9, 0.9));
    records.push_back(make_record("vanilla", 0, "var", "c1", 0.8, 0.8));
    records.push_back(make_record("mixed", 0, "var", "c0", 0.5, 0.5));
    // c1 never ran on mixed.
    try {
        select_hyperparams(records, SelectionMode::best_per_dataset);
        FAIL("expected a coverage error");
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("c1") != std::string::npos);
        CHECK(msg.find("mixed") != std::string::npos);
    }
}

TEST_CASE("aggregate: sentinel rows are excluded from the statistics") {
    std::vector<EvalRecord> records;
    records.push_back(make_record("vanilla", 0, "var", "c0", 0.8, 0.6));
    EvalRecord sentinel = make_record("vanilla", 1, "var", "c0", 0.0, 0.0);
    sentinel.auroc.reset();
    sentinel.auprc.reset();
    records.push_back(sentinel);
    auto rows = aggregate(records, SelectionMode::best_per_dataset);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 1);
    CHECK(rows[0].mean_auroc == doctest::Approx(80.0));
}
