#include <doctest.h>

#include <cmath>
#include <set>

#include "../oracles.hpp"
#include "opevo/evolution.hpp"
#include "support.hpp"

using namespace opevo;
using namespace opevo::evolution;
using opevo::llm::MockBackend;
using opevo::llm::PromptKind;
using testsupport::stub_source;
using testsupport::tagged;

namespace {

SuiteSpec small_suite() {
    Rng rng(31);
    SuiteSpec s;
    s.category = Category::MOKP;
    for (int i = 0; i < 2; ++i) {
        auto inst = generate_mokp(30, 2, rng);
        inst.id = "kp" + std::to_string(i);
        s.instances.push_back(std::move(inst));
    }
    return s;
}

EvolutionConfig small_config(std::size_t n_ev = 4, std::size_t g_ev = 2) {
    EvolutionConfig c;
    c.n_ev = n_ev;
    c.g_ev = g_ev;
    c.category = Category::MOKP;
    c.run_seed = 17;
    c.budget = {20, 5};
    c.worker = testsupport::stub_spec();
    return c;
}

OperatorCandidate candidate(const std::string& id, double score) {
    OperatorCandidate c;
    c.artifact.id = id;
    c.artifact.source = "def next_generation(): pass";
    c.report = ScoreReport{{{"x", score}}, score};
    return c;
}

struct EventLog {
    std::vector<std::pair<std::string, nlohmann::json>> events;
    EvolutionHooks hooks() {
        EvolutionHooks h;
        h.event = [this](const std::string& t, const nlohmann::json& d) { events.emplace_back(t, d); };
        return h;
    }
    std::size_t count(const std::string& type) const {
        std::size_t n = 0;
        for (const auto& e : events) n += e.first == type;
        return n;
    }
};

} // namespace

TEST_CASE("selection probabilities") {
    auto p = selection_probabilities(std::vector<double>{0.0, 0.0});
    CHECK(p[0] == doctest::Approx(0.5));
    p = selection_probabilities(std::vector<double>{1.0, 0.0});
    CHECK(p[0] == doctest::Approx(std::exp(1.0) / (1 + std::exp(1.0))));

    Rng rng(41);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> s(2 + uniform_index(rng, 10));
        for (auto& x : s) x = uniform01(rng) * 4 - 2;
        auto got = selection_probabilities(s);
        auto want = oracle::softmax_direct(s);
        double total = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
            total += got[i];
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        // shifting every score leaves the distribution unchanged
        auto shifted = s;
        for (auto& x : shifted) x += 1000;
        auto q = selection_probabilities(shifted);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(q[i] == doctest::Approx(got[i]).epsilon(1e-12));
    }

    // far-behind operators keep a floor
    p = selection_probabilities(std::vector<double>{0.0, -1000.0});
    CHECK(p[1] > 0);
    CHECK(p[1] == doctest::Approx(kProbabilityFloor / (1 + kProbabilityFloor)));
    CHECK_THROWS(selection_probabilities(std::vector<double>{}));
}

TEST_CASE("parents are sampled without replacement in proportion to probability") {
    Rng rng(42);
    std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
    std::vector<double> first(4, 0.0);
    const int trials = 40000;
    for (int t = 0; t < trials; ++t) {
        auto idx = sample_parents(probs, 3, rng);
        REQUIRE(idx.size() == 3);
        CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 3);
        first[idx[0]] += 1;
    }
    for (std::size_t i = 0; i < 4; ++i) {
        double se = std::sqrt(probs[i] * (1 - probs[i]) / trials);
        CHECK(std::abs(first[i] / trials - probs[i]) < 4 * se);
    }
    // the second draw renormalizes over what is left
    std::size_t second_is_3 = 0, first_is_0 = 0;
    for (int t = 0; t < trials; ++t) {
        auto idx = sample_parents(probs, 2, rng);
        if (idx[0] == 0) {
            ++first_is_0;
            second_is_3 += idx[1] == 3;
        }
    }
    double cond = static_cast<double>(second_is_3) / first_is_0;
    CHECK(std::abs(cond - 0.4 / 0.9) < 4 * std::sqrt(0.25 / first_is_0));

    auto all = sample_parents(std::vector<double>{0.0, 1.0, 0.0}, 3, rng);
    CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 3);
    CHECK_THROWS(sample_parents(probs, 5, rng));
}

TEST_CASE("elitist update keeps the size and prefers incumbents on ties") {
    std::vector<OperatorCandidate> pop{candidate("a", 0.9), candidate("b", 0.5), candidate("c", 0.3)};
    auto tied = elitist_update(pop, candidate("n", 0.3));
    CHECK(tied.size() == 3);
    CHECK(tied.back().artifact.id == "c");

    auto better = elitist_update(pop, candidate("n", 0.6));
    CHECK(better[1].artifact.id == "n");
    CHECK(better[2].artifact.id == "b");

    auto worse = elitist_update(pop, candidate("n", 0.1));
    for (std::size_t i = 0; i < 3; ++i) CHECK(worse[i].artifact.id == pop[i].artifact.id);

    OperatorCandidate unscored;
    unscored.artifact.id = "u";
    CHECK(unscored.score() == 0.0);
}

TEST_CASE("evolution config validation") {
    auto c = small_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.effective_n_max() == 2);
    c.n_max = 5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.n_ev = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.n_trial = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.worker.command.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);

    MockBackend mock({});
    auto suite = small_suite();
    suite.category = Category::CMOP;
    CHECK_THROWS_AS(Evolver(small_config(), suite, mock), ConfigError);
    CHECK_THROWS_AS(Evolver(small_config(), SuiteSpec{Category::MOKP}, mock), ConfigError);
}

TEST_CASE("evaluation seeds are stable and distinct") {
    CHECK(evaluation_seed(1, "g00_op00", "kp0") == evaluation_seed(1, "g00_op00", "kp0"));
    CHECK(evaluation_seed(1, "g00_op00", "kp0") != evaluation_seed(2, "g00_op00", "kp0"));
    CHECK(evaluation_seed(1, "g00_op00", "kp0") != evaluation_seed(1, "g00_op01", "kp0"));
    CHECK(evaluation_seed(1, "g00_op00", "kp0") != evaluation_seed(1, "g00_op00", "kp1"));
}

TEST_CASE("mutation gate fires with probability 1/N_ev") {
    // every gated mutation exhausts the empty mock once, then falls back
    MockBackend mock({});
    auto cfg = small_config(4);
    cfg.attempt_cap = 1;
    Evolver ev(cfg, small_suite(), mock);
    sandbox::OperatorArtifact input;
    input.id = "g00_op00";
    input.source = stub_source("identity");
    const int trials = 8000;
    for (int t = 0; t < trials; ++t) {
        auto out = ev.mutation_step(input, 1);
        CHECK(out.id == input.id);
    }
    double rate = static_cast<double>(mock.total_calls()) / trials;
    CHECK(std::abs(rate - 0.25) < 4 * std::sqrt(0.25 * 0.75 / trials));

    auto before = mock.total_calls();
    ev.mutation_step(input, 1, 0.25);
    CHECK(mock.total_calls() == before);
    ev.mutation_step(input, 1, 0.2499);
    CHECK(mock.total_calls() == before + 1);
}

TEST_CASE("initialization repairs a broken operator") {
    MockBackend mock({{PromptKind::Initialization, {tagged(stub_source("divzero")), tagged(stub_source("identity"))}},
                      {PromptKind::Repair, {tagged(stub_source("ga"))}}});
    EventLog log;
    auto cfg = small_config(2);
    Evolver ev(cfg, small_suite(), mock, log.hooks());
    auto pop = ev.initialize_population();
    REQUIRE(pop.size() == 2);
    CHECK(ev.llm_calls() == 3);
    CHECK(mock.calls(PromptKind::Repair) == 1);
    std::size_t repaired = 0;
    for (const auto& c : pop) {
        CHECK(c.report.has_value());
        CHECK(c.generation_admitted == 0);
        repaired += c.artifact.origin == sandbox::Origin::Repair;
    }
    CHECK(repaired == 1);
    CHECK(pop[0].score() >= pop[1].score());
    CHECK(log.count("pilot_passed") == 2);

    // the repair request continues the initialization dialogue
    auto hist = mock.history();
    REQUIRE(hist.size() == 3);
    const auto& msgs = hist[1].messages();
    REQUIRE(msgs.size() == 4);
    CHECK(msgs[2].role == llm::Role::Assistant);
    CHECK(msgs[3].content.find("ZeroDivisionError") != std::string::npos);
}

TEST_CASE("initialization aborts after the attempt cap") {
    MockBackend mock({{PromptKind::Initialization, std::vector<std::string>(10, "no code here")}});
    EventLog log;
    auto cfg = small_config(2);
    cfg.attempt_cap = 3;
    Evolver ev(cfg, small_suite(), mock, log.hooks());
    CHECK_THROWS_AS(ev.initialize_population(), InitializationAborted);
    CHECK(mock.total_calls() == 3);
    CHECK(log.count("extract_error") == 3);
    CHECK(log.count("initialization_aborted") == 1);
}

TEST_CASE("crossover falls back to a clone of the best parent") {
    MockBackend mock({{PromptKind::Crossover, {"nothing", "still nothing"}}});
    EventLog log;
    auto cfg = small_config();
    cfg.attempt_cap = 4;
    Evolver ev(cfg, small_suite(), mock, log.hooks());
    auto a = candidate("g00_op00", 0.2);
    auto b = candidate("g00_op01", 0.7);
    b.artifact.source = stub_source("ga");
    auto child = ev.crossover_step({a, b}, 3);
    CHECK(mock.total_calls() == 4);
    CHECK(log.count("extract_error") == 2);
    CHECK(log.count("backend_error") == 2);
    CHECK(log.count("fallback") == 1);
    CHECK(child.source == b.artifact.source);
    CHECK(child.id == "g03_op00");
    CHECK(child.parents == std::vector<std::string>{"g00_op01"});
    CHECK(child.origin == sandbox::Origin::Crossover);
    CHECK(child.created_generation == 3);
}

TEST_CASE("full mock evolution") {
    auto script = MockBackend::script_from_directory(OPEVO_FIXTURES "/mock_run");
    auto cfg = small_config(4, 2);
    auto run_once = [&] {
        MockBackend mock(script);
        EventLog log;
        std::vector<std::size_t> sizes;
        auto hooks = log.hooks();
        hooks.generation = [&](std::size_t, const std::vector<OperatorCandidate>& p) { sizes.push_back(p.size()); };
        auto r = evolve(cfg, small_suite(), mock, hooks);
        CHECK(r.llm_calls == mock.total_calls());
        CHECK(sizes == std::vector<std::size_t>{4, 4, 4});
        CHECK(log.count("elitist_update") == cfg.n_ev * cfg.g_ev);
        return r;
    };
    auto r = run_once();
    REQUIRE(r.trace.size() == 3);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
    CHECK(r.best.score() == r.trace.back());
    CHECK(r.scored_operators == cfg.n_ev + cfg.n_ev * cfg.g_ev);
    const std::size_t per_generate = 1 + cfg.n_trial;
    const std::size_t bound = per_generate * cfg.attempt_cap * (cfg.n_ev + 2 * cfg.n_ev * cfg.g_ev);
    CHECK(r.llm_calls <= bound);

    auto again = run_once();
    CHECK(again.trace == r.trace);
    CHECK(again.best.artifact.id == r.best.artifact.id);
    CHECK(again.llm_calls == r.llm_calls);
}
