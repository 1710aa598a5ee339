#include "opevo/llm/prompts.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace opevo::llm {

namespace {

// Prompt templates. Markers are replaced in a single left-to-right pass, so
// substituted text is never rescanned.

constexpr const char* kInitSystem =
    "You are an expert in designing intelligent evolutionary search strategies that can solve #PROBLEM# "
    "efficiently and effectively. #PROBLEM_DESC#";

constexpr const char* kInitUser =
    "Description of Task:\n"
    "Your task is to evolve a superior evolutionary operator with Python for tackling #PROBLEM#, with the goal of "
    "achieving top search performance across #PROBLEM#. You have to provide me the Python code with a single "
    "function namely 'next_generation' following the format and the requirements given below, which are matched "
    "with their functionalities:\n"
    "#FORMAT#\n"
    "\n"
    "Requirements:\n"
    "You have to return me a single function namely 'next_generation', keep the format of input and the format of "
    "output unchanged, and provide concise descriptions in the annotation.\n"
    "Please return me an XML text using the following format:\n"
    "<next_generation>\n"
    "...\n"
    "</next_generation>\n"
    "where '...' gives only the entire code without any additional information. To enable direct compilation for "
    "the code given in '...', please don't provide any other text except the single Python function namely "
    "'next_generation' with its annotation.\n"
    "No Explanation Needed!!";

constexpr const char* kCrossoverUser =
    "Description of Task:\n"
    "I will showcase several evaluated 'next_generation' functions in XML format, with their scores obtained on the "
    "#PROBLEM#. Your task is to conceive an advanced function with the same input/output formats, termed "
    "'next_generation', that is inspired by the evaluated cases.\n"
    "#FORMAT#\n"
    "Below, you will find the #N_s# evaluated 'next_generation' functions in XML texts, each accompanied by its "
    "corresponding score.\n"
    "#SELECTED_OPERATORS#\n"
    "\n"
    "Requirements:\n"
    "Kindly devise an innovative 'next_generation' method with XML that retains the identical input/output "
    "structure. This method should be crafted through a meticulous analysis of the shared characteristics among "
    "high-performing algorithms.\n"
    "No Explanation Needed!!";

constexpr const char* kMutationUser =
    "Description of Task:\n"
    "I will introduce an evolutionary search function titled 'next_generation' in XML format. Your task is to "
    "meticulously refine this function and propose a novel one that may obtain superior search performance on "
    "#PROBLEM#, ensuring the input/output formats, function name, and core functionality remain unaltered.\n"
    "#FORMAT#\n"
    "The original function is given by:\n"
    "<next_generation>#OPERATOR#</next_generation>\n"
    "\n"
    "Requirements:\n"
    "Please return me an innovative 'next_generation' operator with the same XML format. No Explanation Needed!!";

constexpr const char* kRepairUser =
    "Description of Task:\n"
    "The code you provided for me cannot pass my demo test on #PROBLEM#. The error is given by: #ERROR#. Can you "
    "correct the code according to the errors?\n"
    "\n"
    "Requirements:\n"
    "Please return me a refined 'next_generation' with the same XML format, i.e., "
    "<next_generation>...</next_generation>, where the '...' represents the code snippet.\n"
    "No Explanation Needed!!";

const char* const kMarkers[] = {"#PROBLEM_DESC#", "#PROBLEM#", "#FORMAT#", "#SELECTED_OPERATORS#",
                                "#N_s#",          "#OPERATOR#", "#ERROR#"};

using Values = std::map<std::string, std::string>;

std::string substitute(std::string_view tpl, const Values& values) {
    std::string out;
    out.reserve(tpl.size() * 2);
    std::size_t i = 0;
    while (i < tpl.size()) {
        bool replaced = false;
        if (tpl[i] == '#') {
            for (const char* marker : kMarkers) {
                std::string_view m(marker);
                if (tpl.substr(i, m.size()) != m) continue;
                auto it = values.find(std::string(m));
                if (it == values.end()) throw PromptError(std::string("prompt placeholder ") + marker + " is not populated");
                out += it->second;
                i += m.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) out += tpl[i++];
    }
    return out;
}

const std::string& require(const std::optional<std::string>& v, const char* marker) {
    if (!v || v->empty()) throw PromptError(std::string("prompt placeholder ") + marker + " is not populated");
    return *v;
}

void check_budget(const ChatTranscript& t, const PromptContext& ctx) {
    if (t.size_chars() > ctx.char_budget)
        throw PromptError("rendered prompt has " + std::to_string(t.size_chars()) + " characters, over the budget of " +
                          std::to_string(ctx.char_budget));
}

std::string tail(const std::string& s, std::size_t n) { return s.size() <= n ? s : s.substr(s.size() - n); }

std::string selected_block(const std::vector<ScoredOperator>& ops) {
    std::string out;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if (i) out += "\n";
        out += "<next_generation>\n";
        out += ops[i].source;
        out += "\n</next_generation>\n";
        out += format_score(ops[i].score);
    }
    return out;
}

} // namespace

std::string format_score(double score) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "score: %.6g", score);
    return buf;
}

std::string problem_name(Category category) {
    switch (category) {
    case Category::CMOP: return "continuous multi-objective optimization problems (CMOPs)";
    case Category::MOKP: return "multi-objective knapsack problems (MOKPs)";
    case Category::MOTSP: return "multi-objective traveling salesman problems (MOTSPs)";
    }
    return "multi-objective optimization problems";
}

std::string problem_description(Category category) {
    switch (category) {
    case Category::CMOP:
        return "A CMOP minimizes two or three conflicting objectives over a vector of continuous decision variables, "
               "each confined to a box [lower, upper]. The benchmark instances are the ZDT (two objectives) and DTLZ "
               "(three objectives) families, which feature convex, concave, disconnected, multimodal and biased "
               "Pareto fronts. ZDT5 is the exception: its decision vector is a bitstring. Solutions are judged by how "
               "closely and evenly the final population covers the true Pareto front.";
    case Category::MOKP:
        return "An MOKP selects a subset of n items, encoded as a bitstring x with x_j = 1 when item j is packed. "
               "Each item has a positive weight w_j and a positive profit for each of the k objectives, and the "
               "objective f_i(x) is the sum of the i-th profits of the packed items, to be maximized. The total "
               "weight of the packed items must not exceed the capacity C. Infeasible offspring are repaired by "
               "removing random items, so operators that respect the capacity waste fewer evaluations.";
    case Category::MOTSP:
        return "An MOTSP looks for a visiting order of n cities, encoded as a permutation of 0..n-1. There are k "
               "distance matrices, one per objective, each symmetric with zero diagonal, and objective f_i is the sum "
               "of the i-th distances between consecutive cities of the route. All objectives are minimized and a "
               "good operator finds routes that trade the objectives off evenly.";
    }
    return {};
}

std::string operator_format(Category category) {
    std::string genome;
    switch (category) {
    case Category::CMOP:
        genome = "a list of n_var floats within problem_meta['lower'] and problem_meta['upper'] (for ZDT5, "
                 "problem_meta['encoding'] is 'bitstring' and a genome is a list of 0/1 integers)";
        break;
    case Category::MOKP: genome = "a list of n_var integers, each 0 or 1"; break;
    case Category::MOTSP: genome = "a list containing every integer 0..n_var-1 exactly once"; break;
    }
    return "def next_generation(parents, parent_objectives, problem_meta, seed):\n"
           "    parents: list of N genomes, each " + genome + ".\n"
           "    parent_objectives: list of N lists of k floats, the objective values of each parent on the problem's "
           "own scale (problem_meta['orientation'] tells whether they are minimized or maximized).\n"
           "    problem_meta: dict with 'category', 'encoding', 'n_var', 'k', 'orientation', 'objective_bounds' "
           "({'ideal': [...], 'nadir': [...]}), 'lower'/'upper' for real variables, 'weights'/'capacity' for knapsack "
           "problems and 'closed_tour' for traveling salesman problems.\n"
           "    seed: int; all randomness must come from random.Random(seed) or numpy.random.default_rng(seed).\n"
           "    return: a list of exactly N offspring genomes in the same encoding as parents. The caller evaluates "
           "the offspring, merges them with the parents and keeps the best N by nondominated sorting and crowding "
           "distance.\n"
           "Only the math, random and numpy modules may be imported.";
}

PromptContext context_for(Category category) {
    PromptContext ctx;
    ctx.problem_name = problem_name(category);
    ctx.problem_desc = problem_description(category);
    ctx.format_spec = operator_format(category);
    return ctx;
}

ChatTranscript render_initialization(const PromptContext& ctx) {
    Values v{{"#PROBLEM#", require(ctx.problem_name, "#PROBLEM#")},
             {"#PROBLEM_DESC#", require(ctx.problem_desc, "#PROBLEM_DESC#")},
             {"#FORMAT#", require(ctx.format_spec, "#FORMAT#")}};
    ChatTranscript t(PromptKind::Initialization, ctx.temperature);
    t.append(Role::System, substitute(kInitSystem, v));
    t.append(Role::User, substitute(kInitUser, v));
    check_budget(t, ctx);
    return t;
}

ChatTranscript render_crossover(const PromptContext& ctx) {
    if (!ctx.n_selected || *ctx.n_selected < 2) throw PromptError("crossover needs at least two selected operators");
    if (ctx.selected.size() != *ctx.n_selected)
        throw PromptError("crossover: n_selected is " + std::to_string(*ctx.n_selected) + " but " +
                          std::to_string(ctx.selected.size()) + " operators were given");
    for (const auto& op : ctx.selected)
        if (op.source.empty()) throw PromptError("crossover: empty parent operator source");

    std::vector<ScoredOperator> parents = ctx.selected;
    for (;;) {
        Values v{{"#PROBLEM#", require(ctx.problem_name, "#PROBLEM#")},
                 {"#FORMAT#", require(ctx.format_spec, "#FORMAT#")},
                 {"#N_s#", std::to_string(parents.size())},
                 {"#SELECTED_OPERATORS#", selected_block(parents)}};
        ChatTranscript t(PromptKind::Crossover, ctx.temperature);
        t.append(Role::User, substitute(kCrossoverUser, v));
        if (t.size_chars() <= ctx.char_budget) return t;
        if (parents.size() <= 2) check_budget(t, ctx);
        auto worst = std::min_element(parents.begin(), parents.end(),
                                      [](const ScoredOperator& a, const ScoredOperator& b) { return a.score < b.score; });
        parents.erase(worst);
    }
}

ChatTranscript render_mutation(const PromptContext& ctx) {
    Values v{{"#PROBLEM#", require(ctx.problem_name, "#PROBLEM#")},
             {"#FORMAT#", require(ctx.format_spec, "#FORMAT#")},
             {"#OPERATOR#", require(ctx.operator_source, "#OPERATOR#")}};
    ChatTranscript t(PromptKind::Mutation, ctx.temperature);
    t.append(Role::User, substitute(kMutationUser, v));
    check_budget(t, ctx);
    return t;
}

namespace {
std::string repair_message(const PromptContext& ctx) {
    Values v{{"#PROBLEM#", require(ctx.problem_name, "#PROBLEM#")},
             {"#ERROR#", tail(require(ctx.error_text, "#ERROR#"), kRepairErrorTail)}};
    return substitute(kRepairUser, v);
}
} // namespace

ChatTranscript render_repair(const PromptContext& ctx) {
    ChatTranscript t(PromptKind::Repair, ctx.temperature);
    t.append(Role::User, repair_message(ctx));
    check_budget(t, ctx);
    return t;
}

void append_repair(ChatTranscript& transcript, const PromptContext& ctx) {
    std::string msg = repair_message(ctx);
    if (transcript.size_chars() + msg.size() > ctx.char_budget)
        throw PromptError("repair dialogue would exceed the character budget");
    transcript.append(Role::User, std::move(msg));
    transcript.set_kind(PromptKind::Repair);
}

} // namespace opevo::llm
