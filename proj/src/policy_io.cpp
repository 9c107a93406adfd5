#include "hsvi/policy_io.hpp"

#include "hsvi/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace hsvi {

namespace {

constexpr const char* kHeader = "alpha-policy v1 |S|=";

void check_policy(const PolicyFile& policy) {
    if (policy.num_states <= 0) {
        throw ValidationError("policy needs a positive state count");
    }
    for (const auto& v : policy.vectors) {
        if (static_cast<int>(v.values.size()) != policy.num_states) {
            throw ValidationError("alpha vector length differs from the policy state count");
        }
        if (v.action < 0) {
            throw ValidationError("alpha vector has a negative action index");
        }
    }
}

} // namespace

PolicyFile make_policy(const LowerBound& lb, int num_states) {
    PolicyFile policy{num_states, {lb.vectors().begin(), lb.vectors().end()}};
    check_policy(policy);
    return policy;
}

LowerBound to_lower_bound(const PolicyFile& policy) { return LowerBound(policy.vectors); }

void save_policy(const PolicyFile& policy, std::ostream& out) {
    check_policy(policy);
    out << kHeader << policy.num_states << '\n';
    char buf[40];
    for (const auto& v : policy.vectors) {
        out << v.action << '\n';
        for (std::size_t s = 0; s < v.values.size(); ++s) {
            std::snprintf(buf, sizeof buf, "%.17g", v.values[s]);
            out << (s ? " " : "") << buf;
        }
        out << '\n';
    }
}

void save_policy(const PolicyFile& policy, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write policy file " + path.string());
    }
    save_policy(policy, out);
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

PolicyFile load_policy(std::istream& in) {
    std::string line;
    int line_no = 1;
    if (!std::getline(in, line) || line.rfind(kHeader, 0) != 0) {
        throw ParseError("missing 'alpha-policy v1' header", line_no);
    }
    PolicyFile policy;
    const std::string count = line.substr(std::char_traits<char>::length(kHeader));
    auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), policy.num_states);
    if (ec != std::errc() || ptr != count.data() + count.size() || policy.num_states <= 0) {
        throw ParseError("bad state count '" + count + "'", line_no);
    }

    auto blank = [](const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; };
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) {
            continue;
        }
        AlphaVector v;
        {
            std::istringstream head(line);
            std::string extra;
            if (!(head >> v.action) || v.action < 0 || (head >> extra)) {
                throw ParseError("expected a non-negative action index", line_no);
            }
        }
        if (!std::getline(in, line)) {
            throw ParseError("missing value line after action", line_no + 1);
        }
        ++line_no;
        std::istringstream values(line);
        std::string tok;
        while (values >> tok) {
            double x = 0.0;
            auto [p, e] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
            if (e != std::errc() || p != tok.data() + tok.size()) {
                throw ParseError("bad value '" + tok + "'", line_no);
            }
            v.values.push_back(x);
        }
        if (static_cast<int>(v.values.size()) != policy.num_states) {
            throw ParseError("expected " + std::to_string(policy.num_states) + " values, found " +
                                 std::to_string(v.values.size()),
                             line_no);
        }
        policy.vectors.push_back(std::move(v));
    }
    return policy;
}

PolicyFile load_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open policy file " + path.string());
    }
    return load_policy(in);
}

} // namespace hsvi
