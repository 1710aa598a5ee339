#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "../oracles.hpp"
#include "opevo/metrics.hpp"

using namespace opevo;

namespace {

std::vector<Point> random_points(Rng& rng, std::size_t n, std::size_t m, bool integer = false) {
    std::vector<Point> pts(n, Point(m));
    for (auto& p : pts)
        for (auto& v : p) v = integer ? static_cast<double>(uniform_index(rng, 5)) : uniform01(rng);
    return pts;
}

} // namespace

TEST_CASE("hypervolume hand examples") {
    CHECK(hypervolume({{0, 0}}, {1, 1}) == doctest::Approx(1.0));
    CHECK(hypervolume({{0.5, 0.5}}, {1, 1}) == doctest::Approx(0.25));
    CHECK(hypervolume({{0.25, 0.75}, {0.75, 0.25}}, {1, 1}) == doctest::Approx(0.3125));
    CHECK(hypervolume({{0, 0, 0}}, {1, 1, 1}) == doctest::Approx(1.0));
    CHECK(hypervolume({{0.5, 0.5, 0.5}}, {1, 1, 1}) == doctest::Approx(0.125));
    // points not strictly inside the box add nothing
    CHECK(hypervolume({{1, 0}}, {1, 1}) == 0.0);
    CHECK(hypervolume({}, {1, 1}) == 0.0);
    CHECK(hypervolume({{2, 2}, {0.5, 0.5}}, {1, 1}) == doctest::Approx(0.25));
}

TEST_CASE("hypervolume matches Monte-Carlo estimates") {
    Rng rng(101);
    for (std::size_t m : {2u, 3u}) {
        for (int t = 0; t < 6; ++t) {
            auto pts = random_points(rng, 1 + uniform_index(rng, 25), m);
            Point ref(m, 1.0), lower(m, 0.0);
            auto est = oracle::mc_hypervolume(pts, lower, ref, 200000, 7 + t);
            CHECK(std::abs(hypervolume(pts, ref) - est.value) <= 4 * est.std_error + 1e-12);
        }
    }
}

TEST_CASE("hypervolume is invariant to duplicates and dominated points") {
    Rng rng(102);
    for (int t = 0; t < 30; ++t) {
        auto pts = random_points(rng, 20, 3);
        Point ref{1.1, 1.1, 1.1};
        double hv = hypervolume(pts, ref);
        auto more = pts;
        more.push_back(pts[0]);
        more.push_back({1.05, 1.05, 1.05});
        CHECK(hypervolume(more, ref) == doctest::Approx(hv).epsilon(1e-12));
        CHECK(hypervolume(nondominated_filter(pts), ref) == doctest::Approx(hv).epsilon(1e-12));
    }
}

TEST_CASE("dominance against the oracle") {
    Rng rng(103);
    for (int t = 0; t < 2000; ++t) {
        auto pts = random_points(rng, 2, 2 + uniform_index(rng, 2), true);
        CHECK(dominates(pts[0], pts[1]) == oracle::dominates(pts[0], pts[1]));
    }
    CHECK_FALSE(dominates(std::vector<double>{1, 1}, std::vector<double>{1, 1}));
}

TEST_CASE("nondominated filter against the oracle") {
    Rng rng(104);
    for (int t = 0; t < 200; ++t) {
        auto pts = random_points(rng, 1 + uniform_index(rng, 60), 2 + uniform_index(rng, 2), t % 2 == 0);
        CHECK(nondominated_indices(pts) == oracle::nondominated(pts));
    }
    CHECK(nondominated_indices({}).empty());
}

TEST_CASE("igd against the oracle") {
    Rng rng(105);
    for (int t = 0; t < 200; ++t) {
        std::size_t m = 2 + uniform_index(rng, 2);
        auto ref = random_points(rng, 1 + uniform_index(rng, 50), m);
        auto approx = random_points(rng, 1 + uniform_index(rng, 30), m);
        CHECK(igd(ref, approx) == doctest::Approx(oracle::igd(ref, approx)).epsilon(1e-12));
    }
    CHECK(igd({{0, 0}, {1, 1}}, {{0, 0}}) == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(igd({{0, 1}}, {{0, 1}}) == 0.0);
}

TEST_CASE("metric preconditions") {
    CHECK_THROWS_AS(igd({}, {{0, 0}}), MetricError);
    CHECK_THROWS_AS(hypervolume({{0, 0, 0, 0}}, {1, 1, 1, 1}), MetricError);
    CHECK_THROWS_AS(hypervolume({{0, 0}}, {1, 1, 1}), MetricError);
}

TEST_CASE("normalize clamps to [0, 2]") {
    auto n = normalize({{5, 0}, {-1, 30}}, {0, 0}, {10, 10});
    CHECK(n[0] == Point{0.5, 0.0});
    CHECK(n[1] == Point{0.0, 2.0});
}

TEST_CASE("problem score by category") {
    CHECK(problem_score(Category::CMOP, 0.25) == doctest::Approx(0.75));
    CHECK(problem_score(Category::MOKP, 0.25) == doctest::Approx(0.75));
    CHECK(problem_score(Category::MOTSP, 0.25) == doctest::Approx(0.25));
}

TEST_CASE("aggregate score is mean minus population std") {
    CHECK(aggregate_score(std::vector<double>{0.5, 0.5, 0.5}) == doctest::Approx(0.5));
    CHECK(aggregate_score(std::vector<double>{0.0, 1.0}) == doctest::Approx(0.0));
    Rng rng(106);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v(1 + uniform_index(rng, 20));
        for (auto& x : v) x = uniform01(rng);
        CHECK(aggregate_score(v) == doctest::Approx(oracle::mean_minus_pstd(v)).epsilon(1e-12));
    }
    auto r = ScoreReport::from({{"a", 0.2}, {"b", 0.6}});
    CHECK(r.aggregate == doctest::Approx(0.2));
}

TEST_CASE("instance scorer") {
    InstanceScorer zdt1(make_cmop(CmopFamily::ZDT1));
    CHECK(zdt1.reference().size() == InstanceScorer::kReferencePoints);
    CHECK(zdt1.metric(zdt1.reference()) == doctest::Approx(0.0));
    CHECK(zdt1.score(zdt1.reference()) == doctest::Approx(1.0));
    CHECK(zdt1.lower_is_better());

    Rng rng(107);
    auto tsp = generate_motsp(10, 2, rng);
    InstanceScorer s(tsp);
    CHECK_FALSE(s.lower_is_better());
    // tours of length zero would fill the normalized box
    CHECK(s.metric({{0, 0}}) == doctest::Approx(1.0));
    CHECK(s.metric({{100, 100}}) == 0.0);

    auto kp = generate_mokp(10, 2, rng);
    InstanceScorer k(kp);
    CHECK(k.lower_is_better());
    CHECK(k.score({{0.0, 0.0}}) == doctest::Approx(0.0));
    CHECK(k.score({{-kp.bounds.ideal[0], -kp.bounds.ideal[1]}}) == doctest::Approx(1.0));
}
