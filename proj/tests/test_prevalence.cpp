#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "seroclass/harness.hpp"
#include "seroclass/prevalence.hpp"
#include "seroclass/rng.hpp"

using namespace seroclass;

namespace {
const QuadratureSpec kQuad{256, QuadScheme::tensor_gauss_legendre};

fixtures::DensityPair pair_256() {
    static fixtures::DensityPair cached = fixtures::densities(kQuad);
    return cached;
}
}  // namespace

TEST_CASE("empirical fraction: degenerate rules") {
    const auto [pos, neg] = pair_256();
    const auto all_neg = ClassificationRule::binary(0.0, pos, neg);
    const auto pts = sample(*pos, 500, 3);
    CHECK(empirical_positive_fraction(pts, all_neg) == 0.0);

    // Points drawn from the positive density sit overwhelmingly inside the
    // p = 0.5 positive region for these fixtures.
    const auto half = ClassificationRule::binary(0.5, pos, neg);
    CHECK(empirical_positive_fraction(pts, half) > 0.99);

    std::vector<LogPoint> empty;
    CHECK_THROWS_AS(empirical_positive_fraction(empty, half), DataError);
}

TEST_CASE("empirical fraction approaches the mixture mass of the positive region") {
    const auto [pos, neg] = pair_256();
    const double p = 0.3;
    const std::size_t S = 100000;
    const auto draw = sample_mixture(*pos, *neg, p, S, 99);
    const auto rule = ClassificationRule::binary(0.5, pos, neg);
    const auto m = domain_masses(rule, kQuad);
    const double expected = p * m.pos_in_pos + (1.0 - p) * m.neg_in_pos;
    const double got = empirical_positive_fraction(draw.points, rule);
    CHECK(std::abs(got - expected) < 4.0 / std::sqrt(static_cast<double>(S)));
}

TEST_CASE("estimator arithmetic hits the exact endpoints") {
    const auto est0 = estimate_from_fraction(0.001, 0.9, 0.001, 100);
    CHECK(est0.p_hat == 0.0);
    CHECK(!est0.clamped);

    const auto est1 = estimate_from_fraction(0.9, 0.9, 0.001, 100);
    CHECK(est1.p_hat == 1.0);
    CHECK(!est1.clamped);

    const auto mid = estimate_from_fraction(0.5, 0.9, 0.1, 100);
    CHECK(mid.p_hat == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("raw estimates outside [0,1] clamp with a flag") {
    const auto low = estimate_from_fraction(0.0005, 0.9, 0.001, 100);
    CHECK(low.p_hat == 0.0);
    CHECK(low.clamped);

    const auto high = estimate_from_fraction(0.95, 0.9, 0.001, 100);
    CHECK(high.p_hat == 1.0);
    CHECK(high.clamped);
}

TEST_CASE("separation failure raises") {
    CHECK_THROWS_AS(estimate_from_fraction(0.5, 0.5, 0.5, 100), SeparationError);
    const auto [pos, neg] = pair_256();
    // With identical densities on both sides every rule is uninformative.
    const auto rule = ClassificationRule::binary(0.4, neg, neg);
    const auto pts = sample(*neg, 1000, 5);
    CHECK_THROWS_AS(estimate_prevalence(pts, rule, kQuad), SeparationError);
}

TEST_CASE("estimator is unbiased for a fixed non-optimal rule") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.5, pos, neg);  // deliberately 50%
    const double p = 0.2;
    const std::size_t S = 2000;
    const int trials = 200;

    double sum = 0.0, sum2 = 0.0;
    for (int t = 0; t < trials; ++t) {
        const auto draw = sample_mixture(*pos, *neg, p, S, derive_seed(404, t));
        const auto est = estimate_prevalence(draw.points, rule, kQuad);
        sum += est.p_hat;
        sum2 += est.p_hat * est.p_hat;
    }
    const double mean = sum / trials;
    const double var = sum2 / trials - mean * mean;
    const double se = std::sqrt(var / trials);
    CHECK(std::abs(mean - p) < 3.0 * se);
}

// ---------------------------------------------------------------------------
// adaptive classify-estimate-reclassify loop
// ---------------------------------------------------------------------------

TEST_CASE("all-negative input converges to a near-zero prevalence") {
    const auto [pos, neg] = pair_256();
    const std::size_t S = 20000;
    const auto pts = sample(*neg, S, 8);
    AdaptiveOptions opts;
    opts.quad = kQuad;
    const auto result = adaptive_classify(pts, pos, neg, opts);
    REQUIRE(!result.estimates.empty());
    CHECK(result.estimates.back().p_hat < 4.0 / std::sqrt(static_cast<double>(S)));
    std::size_t n_pos = 0;
    for (Label l : result.labels) n_pos += (l == Label::positive);
    CHECK(n_pos < S / 100);
}

TEST_CASE("starting at the true prevalence converges within two iterations") {
    const auto [pos, neg] = pair_256();
    const double p = 0.25;
    const std::size_t S = 20000;
    const auto draw = sample_mixture(*pos, *neg, p, S, 314);
    AdaptiveOptions opts;
    opts.p_init = p;
    opts.quad = kQuad;
    const auto result = adaptive_classify(draw.points, pos, neg, opts);
    CHECK(result.estimates.size() <= 2);
    CHECK(std::abs(result.estimates.back().p_hat - p) <
          4.0 / std::sqrt(static_cast<double>(S)));
}

TEST_CASE("max_iterations = 1 reproduces the single estimate-then-reclassify step") {
    const auto [pos, neg] = pair_256();
    const auto draw = sample_mixture(*pos, *neg, 0.1, 5000, 2718);
    AdaptiveOptions opts;
    opts.max_iterations = 1;
    opts.quad = kQuad;
    const auto result = adaptive_classify(draw.points, pos, neg, opts);
    CHECK(result.estimates.size() == 1);

    // The final labels come from the rule at the single estimate.
    const auto rule =
        ClassificationRule::binary(result.estimates[0].p_hat, pos, neg);
    for (std::size_t i = 0; i < draw.points.size(); ++i)
        CHECK(result.labels[i] == classify(rule, draw.points[i]));
    // And the reported prevalence is the pooled estimate, not the label count.
    std::size_t labeled_positive = 0;
    for (Label l : result.labels) labeled_positive += (l == Label::positive);
    CHECK(result.estimates.back().p_hat !=
          static_cast<double>(labeled_positive) / draw.points.size());
}

TEST_CASE("adaptive loop aborts with a partial trace on separation failure") {
    const auto [pos, neg] = pair_256();
    const auto pts = sample(*neg, 1000, 5);
    AdaptiveOptions opts;
    opts.quad = kQuad;
    bool threw = false;
    try {
        adaptive_classify(pts, neg, neg, opts);  // identical densities
    } catch (const SeparationError& e) {
        threw = true;
        CHECK(e.partial_trace.empty());  // fails at the very first estimate
    }
    CHECK(threw);
}

TEST_CASE("estimate stddev decays like the inverse root of the sample size") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.5, pos, neg);
    const auto m = domain_masses(rule, kQuad);
    const double p = 0.2;
    const int trials = 150;

    std::vector<double> sizes, stds;
    for (const std::size_t S : {100u, 1000u, 10000u}) {
        double sum = 0.0, sum2 = 0.0;
        for (int t = 0; t < trials; ++t) {
            const auto draw =
                sample_mixture(*pos, *neg, p, S, derive_seed(777, S, t));
            std::size_t in_pos = 0;
            for (const auto& pt : draw.points)
                if (classify(rule, pt) == Label::positive) ++in_pos;
            const auto est = estimate_from_fraction(
                static_cast<double>(in_pos) / S, m.pos_in_pos, m.neg_in_pos, S);
            sum += est.p_hat;
            sum2 += est.p_hat * est.p_hat;
        }
        const double mean = sum / trials;
        sizes.push_back(static_cast<double>(S));
        stds.push_back(std::sqrt(sum2 / trials - mean * mean));
    }
    const double exponent = fit_power_exponent(sizes, stds);
    CHECK(exponent == doctest::Approx(-0.5).epsilon(0.2 / 0.5));
}
