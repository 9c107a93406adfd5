#include "hsvi/pomdp_format.hpp"

#include "hsvi/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace hsvi {

namespace {

struct Token {
    std::string text;
    int line;
};

std::vector<Token> tokenize(std::istream& in) {
    std::vector<Token> tokens;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::string word;
        auto flush = [&] {
            if (!word.empty()) {
                tokens.push_back({word, number});
                word.clear();
            }
        };
        for (char c : line) {
            if (c == ':') {
                flush();
                tokens.push_back({":", number});
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                flush();
            } else {
                word += c;
            }
        }
        flush();
    }
    return tokens;
}

std::optional<double> to_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        return std::nullopt;
    }
    return v;
}

std::optional<int> to_index(const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

bool is_keyword(const std::string& s) {
    return s == "discount" || s == "values" || s == "states" || s == "actions" || s == "observations" ||
           s == "start" || s == "T" || s == "O" || s == "R";
}

// An index set: a declared name or number, or every index for `*`.
struct Domain {
    const char* what = "";
    int count = 0;
    std::vector<std::string> names;
    std::unordered_map<std::string, int> lookup;

    void set_names(std::vector<std::string> n) {
        names = std::move(n);
        count = static_cast<int>(names.size());
        lookup.clear();
        for (int i = 0; i < count; ++i) {
            lookup.emplace(names[static_cast<std::size_t>(i)], i);
        }
    }
};

struct RewardEntry {
    int state;       // -1 is a wildcard
    int next_state;  // -1 is a wildcard
    int observation; // -1 is a wildcard
    double value;
};

class Parser {
public:
    Parser(std::vector<Token> tokens, const ParseOptions& options)
        : tokens_(std::move(tokens)), options_(options) {
        states_.what = "state";
        actions_.what = "action";
        observations_.what = "observation";
    }

    PomdpModel run() {
        while (pos_ < tokens_.size()) {
            const Token& head = next();
            if (!is_keyword(head.text)) {
                fail("unexpected token '" + head.text + "'", head.line);
            }
            if (head.text == "start" && !peek_is(":")) {
                fail("unsupported start form (only a belief vector or 'uniform')", head.line);
            }
            expect(":");
            if (head.text == "discount") {
                discount_ = number();
            } else if (head.text == "values") {
                const Token& t = next();
                if (t.text != "reward") {
                    fail("unsupported values type '" + t.text + "'", t.line);
                }
            } else if (head.text == "states") {
                declare(states_, head);
            } else if (head.text == "actions") {
                declare(actions_, head);
            } else if (head.text == "observations") {
                declare(observations_, head);
            } else if (head.text == "start") {
                start(head);
            } else if (head.text == "T") {
                transition(head);
            } else if (head.text == "O") {
                observation(head);
            } else {
                reward(head);
            }
        }
        return finish();
    }

private:
    [[noreturn]] void fail(const std::string& message, int line) const { throw ParseError(message, line); }

    int current_line() const {
        if (tokens_.empty()) {
            return 0;
        }
        return pos_ < tokens_.size() ? tokens_[pos_].line : tokens_.back().line;
    }

    const Token& next() {
        if (pos_ >= tokens_.size()) {
            fail("unexpected end of input", current_line());
        }
        return tokens_[pos_++];
    }

    bool peek_is(const char* text) const { return pos_ < tokens_.size() && tokens_[pos_].text == text; }

    void expect(const char* text) {
        const Token& t = next();
        if (t.text != text) {
            fail(std::string("expected '") + text + "', found '" + t.text + "'", t.line);
        }
    }

    double number() {
        const Token& t = next();
        auto v = to_number(t.text);
        if (!v) {
            fail("expected a number, found '" + t.text + "'", t.line);
        }
        return *v;
    }

    bool at_directive() const {
        return pos_ < tokens_.size() && is_keyword(tokens_[pos_].text) &&
               ((pos_ + 1 < tokens_.size() && tokens_[pos_ + 1].text == ":") || tokens_[pos_].text == "start");
    }

    void declare(Domain& d, const Token& head) {
        if (builder_) {
            fail(head.text + " declared after the first model entry", head.line);
        }
        if (d.count > 0) {
            fail(head.text + " declared twice", head.line);
        }
        std::vector<Token> words;
        while (pos_ < tokens_.size() && !at_directive()) {
            words.push_back(next());
        }
        if (words.empty()) {
            fail("empty " + head.text + " declaration", head.line);
        }
        if (words.size() == 1) {
            if (auto n = to_index(words[0].text)) {
                if (*n <= 0) {
                    fail(head.text + " count must be positive", words[0].line);
                }
                d.count = *n;
                return;
            }
        }
        std::vector<std::string> names;
        for (const auto& w : words) {
            if (w.text == ":" || w.text == "*") {
                fail("invalid " + std::string(d.what) + " name '" + w.text + "'", w.line);
            }
            names.push_back(w.text);
        }
        d.set_names(std::move(names));
        if (d.lookup.size() != static_cast<std::size_t>(d.count)) {
            fail("duplicate " + std::string(d.what) + " name", head.line);
        }
    }

    PomdpBuilder& builder(int line) {
        if (!builder_) {
            if (states_.count == 0 || actions_.count == 0 || observations_.count == 0) {
                fail("states, actions and observations must be declared before model entries", line);
            }
            builder_.emplace(states_.count, actions_.count, observations_.count, 0.0);
            reward_index_.assign(static_cast<std::size_t>(states_.count) * static_cast<std::size_t>(actions_.count),
                                 {});
        }
        return *builder_;
    }

    std::vector<int> pattern(const Domain& d) {
        const Token& t = next();
        std::vector<int> out;
        if (t.text == "*") {
            out.resize(static_cast<std::size_t>(d.count));
            for (int i = 0; i < d.count; ++i) {
                out[static_cast<std::size_t>(i)] = i;
            }
            return out;
        }
        if (auto it = d.lookup.find(t.text); it != d.lookup.end()) {
            return {it->second};
        }
        auto i = to_index(t.text);
        if (!i || *i < 0 || *i >= d.count) {
            fail("unknown " + std::string(d.what) + " '" + t.text + "'", t.line);
        }
        return {*i};
    }

    std::vector<double> numbers(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) {
            v = number();
        }
        return out;
    }

    void start(const Token& head) {
        auto& b = builder(head.line);
        if (peek_is("uniform")) {
            next();
            b.set_initial_belief(Belief::uniform(states_.count));
            has_start_ = true;
            return;
        }
        auto p = numbers(static_cast<std::size_t>(states_.count));
        if (options_.renormalize) {
            double total = 0.0;
            for (double v : p) {
                total += v;
            }
            if (total > 0.0) {
                for (double& v : p) {
                    v /= total;
                }
            }
        }
        try {
            b.set_initial_belief(Belief::from_dense(p));
        } catch (const ValidationError& e) {
            fail(std::string("invalid start belief: ") + e.what(), head.line);
        }
        has_start_ = true;
    }

    void transition(const Token& head) {
        auto& b = builder(head.line);
        const int n = states_.count;
        const auto acts = pattern(actions_);
        if (!peek_is(":")) {
            std::vector<double> matrix;
            if (peek_is("identity") || peek_is("uniform")) {
                const bool identity = next().text == "identity";
                matrix.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), identity ? 0.0 : 1.0 / n);
                if (identity) {
                    for (int s = 0; s < n; ++s) {
                        matrix[static_cast<std::size_t>(s) * n + static_cast<std::size_t>(s)] = 1.0;
                    }
                }
            } else {
                matrix = numbers(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
            }
            for (int a : acts) {
                for (int s = 0; s < n; ++s) {
                    b.set_transition_row(s, a, sparse_row(matrix, static_cast<std::size_t>(s) * n, n));
                }
            }
            return;
        }
        expect(":");
        const auto from = pattern(states_);
        if (!peek_is(":")) {
            std::vector<double> row;
            if (peek_is("uniform")) {
                next();
                row.assign(static_cast<std::size_t>(n), 1.0 / n);
            } else {
                row = numbers(static_cast<std::size_t>(n));
            }
            for (int a : acts) {
                for (int s : from) {
                    b.set_transition_row(s, a, sparse_row(row, 0, n));
                }
            }
            return;
        }
        expect(":");
        const auto to = pattern(states_);
        const double p = number();
        for (int a : acts) {
            for (int s : from) {
                for (int s2 : to) {
                    b.set_transition(s, a, s2, p);
                }
            }
        }
    }

    static std::vector<Transition> sparse_row(const std::vector<double>& values, std::size_t offset, int n) {
        std::vector<Transition> row;
        for (int s2 = 0; s2 < n; ++s2) {
            const double p = values[offset + static_cast<std::size_t>(s2)];
            if (p != 0.0) {
                row.push_back({s2, p});
            }
        }
        return row;
    }

    void observation(const Token& head) {
        auto& b = builder(head.line);
        const int n = states_.count;
        const int m = observations_.count;
        const auto acts = pattern(actions_);
        auto set_row = [&](int a, int s2, const double* row) {
            for (int o = 0; o < m; ++o) {
                b.set_observation(s2, a, o, row[o]);
            }
        };
        if (!peek_is(":")) {
            std::vector<double> matrix;
            if (peek_is("uniform")) {
                next();
                matrix.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), 1.0 / m);
            } else {
                matrix = numbers(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));
            }
            for (int a : acts) {
                for (int s2 = 0; s2 < n; ++s2) {
                    set_row(a, s2, matrix.data() + static_cast<std::size_t>(s2) * static_cast<std::size_t>(m));
                }
            }
            return;
        }
        expect(":");
        const auto to = pattern(states_);
        if (!peek_is(":")) {
            std::vector<double> row;
            if (peek_is("uniform")) {
                next();
                row.assign(static_cast<std::size_t>(m), 1.0 / m);
            } else {
                row = numbers(static_cast<std::size_t>(m));
            }
            for (int a : acts) {
                for (int s2 : to) {
                    set_row(a, s2, row.data());
                }
            }
            return;
        }
        expect(":");
        const auto obs = pattern(observations_);
        const double p = number();
        for (int a : acts) {
            for (int s2 : to) {
                for (int o : obs) {
                    b.set_observation(s2, a, o, p);
                }
            }
        }
    }

    void reward(const Token& head) {
        builder(head.line);
        const auto acts = pattern(actions_);
        expect(":");
        const bool star_from = peek_is("*");
        const auto from = pattern(states_);
        if (!peek_is(":")) {
            fail("unsupported reward form (expected R: a : s : s' : o value)", head.line);
        }
        expect(":");
        const bool star_to = peek_is("*");
        const auto to = pattern(states_);
        if (!peek_is(":")) {
            fail("unsupported reward form (expected R: a : s : s' : o value)", head.line);
        }
        expect(":");
        const bool star_obs = peek_is("*");
        const auto obs = pattern(observations_);
        const double v = number();

        const std::size_t id = rewards_.size();
        rewards_.push_back({star_from ? -1 : from[0], star_to ? -1 : to[0], star_obs ? -1 : obs[0], v});
        for (int a : acts) {
            for (int s : from) {
                reward_index_[static_cast<std::size_t>(a) * static_cast<std::size_t>(states_.count) +
                              static_cast<std::size_t>(s)]
                    .push_back(id);
            }
        }
    }

    void renormalize_rows() {
        auto& b = *builder_;
        for (int a = 0; a < actions_.count; ++a) {
            for (int s = 0; s < states_.count; ++s) {
                auto row = b.transition_row(s, a);
                double total = 0.0;
                for (const auto& t : row) {
                    total += t.probability;
                }
                if (total > 0.0 && total != 1.0) {
                    std::vector<Transition> scaled(row.begin(), row.end());
                    for (auto& t : scaled) {
                        t.probability /= total;
                    }
                    b.set_transition_row(s, a, std::move(scaled));
                }
                double otot = 0.0;
                for (int o = 0; o < observations_.count; ++o) {
                    otot += b.observation(s, a, o);
                }
                if (otot > 0.0 && otot != 1.0) {
                    for (int o = 0; o < observations_.count; ++o) {
                        b.set_observation(s, a, o, b.observation(s, a, o) / otot);
                    }
                }
            }
        }
    }

    // Folds the last matching reward entry for every (s', o) into R(s, a).
    void fold_rewards() {
        auto& b = *builder_;
        for (int a = 0; a < actions_.count; ++a) {
            for (int s = 0; s < states_.count; ++s) {
                const auto& ids = reward_index_[static_cast<std::size_t>(a) * static_cast<std::size_t>(states_.count) +
                                                static_cast<std::size_t>(s)];
                if (ids.empty()) {
                    continue;
                }
                const auto& last = rewards_[ids.back()];
                if (last.next_state < 0 && last.observation < 0) {
                    b.set_reward(s, a, last.value);
                    continue;
                }
                double total = 0.0;
                for (const auto& t : b.transition_row(s, a)) {
                    for (int o = 0; o < observations_.count; ++o) {
                        const double po = b.observation(t.next_state, a, o);
                        if (po == 0.0) {
                            continue;
                        }
                        for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
                            const auto& e = rewards_[*it];
                            if ((e.next_state < 0 || e.next_state == t.next_state) &&
                                (e.observation < 0 || e.observation == o)) {
                                total += t.probability * po * e.value;
                                break;
                            }
                        }
                    }
                }
                b.set_reward(s, a, total);
            }
        }
    }

    PomdpModel finish() {
        if (!discount_) {
            fail("missing discount", current_line());
        }
        auto& b = builder(current_line());
        b.set_discount(*discount_);
        if (!has_start_) {
            b.set_initial_belief(Belief::uniform(states_.count));
        }
        b.set_state_names(states_.names);
        b.set_action_names(actions_.names);
        b.set_observation_names(observations_.names);
        if (options_.renormalize) {
            renormalize_rows();
        }
        fold_rewards();
        return b.build(options_.tolerance);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    ParseOptions options_;
    Domain states_;
    Domain actions_;
    Domain observations_;
    std::optional<double> discount_;
    bool has_start_ = false;
    std::optional<PomdpBuilder> builder_;
    std::vector<RewardEntry> rewards_;
    std::vector<std::vector<std::size_t>> reward_index_;  // [a][s] -> entry ids in file order
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool representable_name(const std::string& name) {
    if (name.empty() || name == "*" || is_keyword(name)) {
        return false;
    }
    for (char c : name) {
        if (c == ':' || c == '#' || std::isspace(static_cast<unsigned char>(c))) {
            return false;
        }
    }
    return true;
}

void write_domain(std::ostream& out, const char* key, int count, const std::vector<std::string>& names) {
    out << key << ":";
    if (names.empty()) {
        out << ' ' << count << '\n';
        return;
    }
    if (names.size() == 1 && to_index(names[0])) {
        throw ValidationError(std::string("a single numeric ") + key + " name cannot be written");
    }
    for (const auto& n : names) {
        if (!representable_name(n)) {
            throw ValidationError("name '" + n + "' cannot be written to a .pomdp file");
        }
        out << ' ' << n;
    }
    out << '\n';
}

} // namespace

PomdpModel parse_pomdp(std::istream& in, const ParseOptions& options) {
    return Parser(tokenize(in), options).run();
}

PomdpModel parse_pomdp(std::string_view text, const ParseOptions& options) {
    std::istringstream in{std::string(text)};
    return parse_pomdp(in, options);
}

PomdpModel load_pomdp(const std::filesystem::path& path, const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open model file " + path.string());
    }
    return parse_pomdp(in, options);
}

void write_pomdp(const PomdpModel& model, std::ostream& out) {
    const auto& sn = model.state_names();
    const auto& an = model.action_names();
    const auto& on = model.observation_names();
    auto state = [&](int s) { return sn.empty() ? std::to_string(s) : sn[static_cast<std::size_t>(s)]; };
    auto action = [&](int a) { return an.empty() ? std::to_string(a) : an[static_cast<std::size_t>(a)]; };

    out << "discount: " << format_double(model.discount()) << '\n';
    out << "values: reward\n";
    write_domain(out, "states", model.num_states(), sn);
    write_domain(out, "actions", model.num_actions(), an);
    write_domain(out, "observations", model.num_observations(), on);

    out << "start:";
    const auto b0 = model.initial_belief().to_dense(model.num_states());
    for (double p : b0) {
        out << ' ' << format_double(p);
    }
    out << "\n\n";

    for (int a = 0; a < model.num_actions(); ++a) {
        for (int s = 0; s < model.num_states(); ++s) {
            for (const auto& t : model.transitions(s, a)) {
                out << "T: " << action(a) << " : " << state(s) << " : " << state(t.next_state) << ' '
                    << format_double(t.probability) << '\n';
            }
        }
    }
    out << '\n';
    for (int a = 0; a < model.num_actions(); ++a) {
        for (int s2 = 0; s2 < model.num_states(); ++s2) {
            out << "O: " << action(a) << " : " << state(s2) << '\n';
            const auto row = model.observation_row(s2, a);
            for (std::size_t o = 0; o < row.size(); ++o) {
                out << (o ? " " : "") << format_double(row[o]);
            }
            out << '\n';
        }
    }
    out << '\n';
    for (int a = 0; a < model.num_actions(); ++a) {
        for (int s = 0; s < model.num_states(); ++s) {
            const double r = model.reward(s, a);
            if (r != 0.0) {
                out << "R: " << action(a) << " : " << state(s) << " : * : * " << format_double(r) << '\n';
            }
        }
    }
}

void save_pomdp(const PomdpModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write model file " + path.string());
    }
    write_pomdp(model, out);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace hsvi
