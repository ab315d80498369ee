#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "seroclass/classifier.hpp"

using namespace seroclass;

namespace {

const QuadratureSpec kQuad{256, QuadScheme::tensor_gauss_legendre};

fixtures::DensityPair pair_256() {
    static fixtures::DensityPair cached = fixtures::densities(kQuad);
    return cached;
}

std::vector<LogPoint> interior_probe_points() {
    std::vector<LogPoint> pts;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.05, 6.95);
    for (int i = 0; i < 200; ++i) pts.push_back({u(rng), u(rng)});
    return pts;
}

}  // namespace

TEST_CASE("binary rule at p = 0 labels every interior point negative") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.0, pos, neg);
    for (const auto& pt : interior_probe_points())
        CHECK(classify(rule, pt) == Label::negative);
}

TEST_CASE("binary rule at p = 1 labels every point with positive density P positive") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(1.0, pos, neg);
    for (const auto& pt : interior_probe_points()) {
        if (pos->value(pt) > 0.0)
            CHECK(classify(rule, pt) == Label::positive);
        else
            CHECK(classify(rule, pt) == Label::negative);
    }
}

TEST_CASE("collapsed ternary interval agrees with the binary rule away from ties") {
    const auto [pos, neg] = pair_256();
    const auto binary = ClassificationRule::binary(0.3, pos, neg);
    const auto ternary = ClassificationRule::ternary({0.3, 0.3}, pos, neg);
    for (const auto& pt : interior_probe_points()) {
        const double pv = pos->value(pt), nv = neg->value(pt);
        if (0.3 * pv == 0.7 * nv) continue;  // exact tie: labels differ by design
        CHECK(classify(binary, pt) == classify(ternary, pt));
    }
}

TEST_CASE("exact ties: negative under binary rules, holdout under ternary rules") {
    const auto [pos, neg] = pair_256();
    const auto binary = ClassificationRule::binary(0.5, pos, neg);
    const auto ternary = ClassificationRule::ternary({0.5, 0.5}, pos, neg);
    // Equal density values at p = 0.5 make the comparison an exact tie.
    CHECK(binary.label_from_values(0.37, 0.37) == Label::negative);
    CHECK(ternary.label_from_values(0.37, 0.37) == Label::holdout);
    // Both densities zero is also a tie.
    CHECK(binary.label_from_values(0.0, 0.0) == Label::negative);
}

TEST_CASE("classify rejects points outside the domain") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.5, pos, neg);
    CHECK_THROWS_AS(classify(rule, {7.5, 1.0}), DataError);
}

TEST_CASE("likelihood ratio has explicit infinity semantics") {
    const auto [pos, neg] = pair_256();
    CHECK(likelihood_ratio(*pos, *neg, {2.0, 2.0}) ==
          doctest::Approx(pos->value({2.0, 2.0}) / neg->value({2.0, 2.0})));

    // Gridded pair with a region where N vanishes but P does not.
    GriddedData n_grid;
    n_grid.xs = {0.0, 3.5, 7.0};
    n_grid.ys = n_grid.xs;
    n_grid.values = {1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    GriddedData p_grid;
    p_grid.xs = n_grid.xs;
    p_grid.ys = n_grid.ys;
    p_grid.values.assign(9, 1.0);
    const auto gp = normalize(std::move(p_grid), {0.0, 7.0});
    const auto gn = normalize(std::move(n_grid), {0.0, 7.0});
    REQUIRE(gn.value({6.5, 6.5}) == 0.0);
    CHECK(std::isinf(likelihood_ratio(gp, gn, {6.5, 6.5})));
    CHECK(likelihood_ratio(gp, gn, {1.0, 1.0}) > 0.0);
}

// ---------------------------------------------------------------------------
// losses and masses
// ---------------------------------------------------------------------------

TEST_CASE("all-holdout override zeroes the binary loss") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.3, pos, neg);
    const auto report = loss_binary_with_labels(rule, kQuad,
                                                [](LogPoint) { return Label::holdout; });
    CHECK(report.total == 0.0);
    CHECK(report.false_pos_mass == 0.0);
    CHECK(report.holdout_mass_pos == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(report.holdout_mass_neg == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("all-positive override costs exactly 1 - p") {
    const auto [pos, neg] = pair_256();
    const double p = 0.3;
    const auto rule = ClassificationRule::binary(p, pos, neg);
    const auto report = loss_binary_with_labels(rule, kQuad,
                                                [](LogPoint) { return Label::positive; });
    CHECK(report.total == doctest::Approx(1.0 - p).epsilon(1e-6));
}

TEST_CASE("indistinguishable populations cost 0.5 at p = 0.5") {
    const auto [pos, neg] = pair_256();
    // Use the same density on both sides; any measurable split costs 1/2.
    const auto rule = ClassificationRule::binary(0.5, neg, neg);
    const auto report = loss_binary(rule, kQuad);
    CHECK(report.total == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("weighted loss reduces bitwise to unweighted at unit weights") {
    const auto [pos, neg] = pair_256();
    const auto plain = ClassificationRule::binary(0.2, pos, neg);
    const auto weighted = ClassificationRule::binary(0.2, pos, neg, {1.0, 1.0});
    const auto a = loss_binary(plain, kQuad);
    const auto b = loss_binary(weighted, kQuad);
    CHECK(a.total == b.total);
    CHECK(a.false_pos_mass == b.false_pos_mass);
    CHECK(a.false_neg_mass == b.false_neg_mass);
}

TEST_CASE("ternary loss: all-holdout yields zero and values stay within [-1, 1]") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::ternary({0.1, 0.7}, pos, neg);
    CHECK(loss_ternary_with_labels(rule, kQuad, [](LogPoint) { return Label::holdout; }) ==
          0.0);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        const auto r = ClassificationRule::ternary({a, b}, pos, neg);
        const double value = loss_ternary(r, kQuad);
        CHECK(value >= -1.0);
        CHECK(value <= 1.0);
    }
}

TEST_CASE("ternary loss matches a term-by-term quadrature oracle") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::ternary({0.15, 0.6}, pos, neg);
    const double got = loss_ternary(rule, kQuad);

    // Independent recomputation of the four integrals with Simpson panels
    // over the classify-induced regions.
    auto region_mass = [&](const TruncatedDensity& dens, Label region) {
        return oracle::simpson2d(
            [&](double x, double y) {
                const LogPoint pt{x, y};
                return classify(rule, pt) == region ? dens.value(pt) : 0.0;
            },
            0.0, 7.0, 700);
    };
    const double expected = (1.0 - 0.15) * region_mass(*neg, Label::positive) +
                            0.6 * region_mass(*pos, Label::negative) -
                            0.15 * region_mass(*pos, Label::positive) -
                            (1.0 - 0.6) * region_mass(*neg, Label::negative);
    CHECK(got == doctest::Approx(expected).epsilon(2e-4));
}

TEST_CASE("domain masses: binary p = 0 puts all mass in the negative region") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.0, pos, neg);
    const auto m = domain_masses(rule, kQuad);
    CHECK(m.neg_in_neg == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.pos_in_neg == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m.pos_in_pos == 0.0);
    CHECK(m.neg_in_pos == 0.0);
}

TEST_CASE("domain masses partition each density") {
    const auto [pos, neg] = pair_256();
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        const auto rule = i % 2 == 0
                              ? ClassificationRule::binary(a, pos, neg)
                              : ClassificationRule::ternary({a, b}, pos, neg);
        const auto m = domain_masses(rule, kQuad);
        CHECK(m.pos_in_pos + m.pos_in_neg + m.pos_in_holdout ==
              doctest::Approx(1.0).epsilon(1e-6));
        CHECK(m.neg_in_pos + m.neg_in_neg + m.neg_in_holdout ==
              doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("positive-region mass grows with the assumed prevalence") {
    const auto [pos, neg] = pair_256();
    double previous = -1.0;
    for (int i = 1; i <= 9; ++i) {
        const auto rule = ClassificationRule::binary(0.1 * i, pos, neg);
        const auto m = domain_masses(rule, kQuad);
        CHECK(m.pos_in_pos >= previous);
        previous = m.pos_in_pos;
    }
}

TEST_CASE("ternary regions nest inside the binary regions at interval prevalences") {
    const auto [pos, neg] = pair_256();
    const auto ternary = ClassificationRule::ternary({0.05, 0.8}, pos, neg);
    for (double p : {0.05, 0.3, 0.8}) {
        const auto binary = ClassificationRule::binary(p, pos, neg);
        for (const auto& pt : interior_probe_points()) {
            const Label t = classify(ternary, pt);
            const Label b = classify(binary, pt);
            if (t == Label::positive) CHECK(b == Label::positive);
            if (t == Label::negative) CHECK(b == Label::negative);
        }
    }
}

// ---------------------------------------------------------------------------
// decision-boundary contours
// ---------------------------------------------------------------------------

TEST_CASE("boundary contour is empty at p = 0") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.0, pos, neg);
    CHECK(boundary_contour(rule, 128).empty());
}

TEST_CASE("contour points straddle a label change within one grid cell") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.2, pos, neg);
    const int resolution = 256;
    const auto polylines = boundary_contour(rule, resolution);
    REQUIRE(!polylines.empty());
    const double cell = 7.0 / resolution;
    std::size_t checked = 0;
    for (const auto& poly : polylines) {
        for (const auto& pt : poly.points) {
            // Step along the diagonal by one cell on both sides; labels must
            // differ somewhere within that bracket.
            const LogPoint lo{std::max(0.0, pt.lx - cell), std::max(0.0, pt.ly - cell)};
            const LogPoint hi{std::min(7.0, pt.lx + cell), std::min(7.0, pt.ly + cell)};
            if (classify(rule, lo) != classify(rule, hi)) ++checked;
        }
    }
    // The diagonal bracket crosses the boundary for the vast majority of
    // contour points (it can miss where the contour runs diagonally).
    std::size_t total = 0;
    for (const auto& poly : polylines) total += poly.points.size();
    CHECK(checked > total * 8 / 10);
}

TEST_CASE("ternary positive-side contour stays out of the negative region") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::ternary({0.02, 0.85}, pos, neg);
    const auto polylines = boundary_contour(rule, 256);
    bool saw_lower = false;
    std::size_t verified = 0;
    for (const auto& poly : polylines) {
        if (poly.side != BoundarySide::lower) continue;
        saw_lower = true;
        for (const auto& pt : poly.points) {
            // Where the positive density's support edge meets the level set
            // (far corner, both densities ~1e-17) the interpolated point
            // collapses onto the support jump; verify the populated part.
            if (pos->value(pt) + neg->value(pt) < 1e-12) continue;
            ++verified;
            CHECK(classify(rule, pt) != Label::negative);
        }
    }
    CHECK(saw_lower);
    CHECK(verified > 100);
}

TEST_CASE("contour resolution precondition") {
    const auto [pos, neg] = pair_256();
    const auto rule = ClassificationRule::binary(0.2, pos, neg);
    CHECK_THROWS_AS(boundary_contour(rule, 32), ConfigError);
}

// ---------------------------------------------------------------------------
// 3-sigma baseline
// ---------------------------------------------------------------------------

TEST_CASE("three-sigma thresholds collapse onto identical points") {
    std::vector<LogPoint> pts(10, LogPoint{1.5, 2.5});
    const auto rule = three_sigma_rule(pts);
    CHECK(rule.threshold_x == doctest::Approx(1.5));
    CHECK(rule.threshold_y == doctest::Approx(2.5));
    CHECK(rule.is_positive({1.6, 2.5}));
    CHECK(!rule.is_positive({1.5, 2.5}));
}

TEST_CASE("three-sigma thresholds sit near 3 for standard-normal data") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> unit;
    std::vector<LogPoint> pts;
    pts.reserve(100000);
    for (int i = 0; i < 100000; ++i) pts.push_back({unit(rng), unit(rng)});
    const auto rule = three_sigma_rule(pts);
    CHECK(rule.threshold_x == doctest::Approx(3.0).epsilon(0.05 / 3.0));
    CHECK(rule.threshold_y == doctest::Approx(3.0).epsilon(0.05 / 3.0));
}

TEST_CASE("three-sigma rule needs two points") {
    std::vector<LogPoint> one{LogPoint{1.0, 1.0}};
    CHECK_THROWS_AS(three_sigma_rule(one), DataError);
}

TEST_CASE("three-sigma box loses at least as much as the optimal rule") {
    const auto [pos, neg] = pair_256();
    const double p = 58.0 / 401.0;
    const auto optimal = ClassificationRule::binary(p, pos, neg);
    const auto optimal_loss = loss_binary(optimal, kQuad).total;

    const auto negatives = sample(*neg, 10000, 13);
    const auto box = three_sigma_rule(negatives);
    const auto box_loss = loss_binary_with_labels(optimal, kQuad, [&](LogPoint pt) {
                              return box.is_positive(pt) ? Label::positive
                                                         : Label::negative;
                          }).total;
    CHECK(box_loss >= optimal_loss);
}
