#include "doctest.h"

#include "hsvi/errors.hpp"
#include "hsvi/policy_io.hpp"

#include <random>
#include <sstream>

using namespace hsvi;

TEST_CASE("policies round trip bit for bit") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> value(0.0, 1e3);
    PolicyFile p;
    p.num_states = 5;
    for (int i = 0; i < 20; ++i) {
        AlphaVector v;
        v.action = i % 4;
        for (int s = 0; s < 5; ++s) {
            v.values.push_back(value(rng));
        }
        p.vectors.push_back(v);
    }
    p.vectors[0].values[0] = 1e-300;
    p.vectors[1].values[1] = -0.0;

    std::stringstream buf;
    save_policy(p, buf);
    CHECK(buf.str().rfind("alpha-policy v1 |S|=5\n", 0) == 0);
    CHECK(load_policy(buf) == p);
}

TEST_CASE("lower bound conversion keeps actions") {
    LowerBound lb({AlphaVector{{1.0, 0.0}, 2}, AlphaVector{{0.0, 1.0}, 0}});
    const auto p = make_policy(lb, 2);
    const auto back = to_lower_bound(p);
    CHECK(back.best(Belief::point_mass(0)).action == 2);
    CHECK(back.best(Belief::point_mass(1)).action == 0);
    CHECK_THROWS_AS(make_policy(lb, 3), ValidationError);
}

TEST_CASE("malformed policy files") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return load_policy(in);
    };
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("alpha-policy v2 |S|=2\n"), ParseError);
    CHECK_THROWS_AS(parse("alpha-policy v1 |S|=0\n"), ParseError);
    CHECK_THROWS_AS(parse("alpha-policy v1 |S|=2\n0\n1.0\n"), ParseError);
    CHECK_THROWS_AS(parse("alpha-policy v1 |S|=2\n-1\n1.0 2.0\n"), ParseError);
    CHECK_THROWS_AS(parse("alpha-policy v1 |S|=2\n0\n1.0 x\n"), ParseError);
    CHECK_THROWS_AS(parse("alpha-policy v1 |S|=2\n0\n"), ParseError);
    try {
        parse("alpha-policy v1 |S|=2\n0\n1 2\n\n1\n1 2 3\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 6);
    }
    CHECK(parse("alpha-policy v1 |S|=1\n").vectors.empty());
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_policy(std::filesystem::path("/nonexistent/dir/policy.txt")), IoError);
}
