// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include "swae/config.hpp"

using namespace swae;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

TEST_CASE("default config serializes and round-trips exactly") {
    const RunConfig cfg = default_config("ring");
    const std::string text = serialize_config(cfg);
    const RunConfig back = parse_config_text(text, "roundtrip");
    REQUIRE(serialize_config(back) == text);

    const RunConfig glyphs = default_config("glyphs");
    REQUIRE(glyphs.model.data_dim == 64);
    REQUIRE(serialize_config(parse_config_text(serialize_config(glyphs), "rt2")) ==
            serialize_config(glyphs));
}

TEST_CASE("data.kind alone selects that kind's model defaults") {
    const RunConfig cfg = parse_config_text("data.kind = glyphs\n", "t");
    REQUIRE(cfg.model.data_dim == 64);
    REQUIRE(cfg.model.h_dim == 16);
    REQUIRE(cfg.model.e1_hidden == std::vector<int>{256, 256});

    const RunConfig ring = parse_config_text("train.lambda = 0.002\n", "t");
    REQUIRE(ring.data.kind == "ring");
    REQUIRE(ring.model.data_dim == 2);
    REQUIRE(ring.train.lambda == 0.002);
}

TEST_CASE("unknown keys fail with the offending line number") {
    REQUIRE_THROWS_MATCHES(
        parse_config_text("train.lambda = 0.001\ntrain.lambdo = 0.1\n", "cfg"), ConfigError,
        MessageMatches(ContainsSubstring("cfg:2") && ContainsSubstring("train.lambdo")));
}

TEST_CASE("malformed lines and values are rejected with diagnostics") {
    REQUIRE_THROWS_MATCHES(parse_config_text("train.lambda\n", "c"), ConfigError,
                           MessageMatches(ContainsSubstring("c:1")));
    REQUIRE_THROWS_MATCHES(parse_config_text("train.k = two\n", "c"), ConfigError,
                           MessageMatches(ContainsSubstring("integer")));
    REQUIRE_THROWS_MATCHES(parse_config_text("train.lambda = abc\n", "c"), ConfigError,
                           MessageMatches(ContainsSubstring("number")));
    REQUIRE_THROWS_MATCHES(parse_config_text("train.scale_recon_by_lambda = yes\n", "c"),
                           ConfigError, MessageMatches(ContainsSubstring("true|false")));
    REQUIRE_THROWS_MATCHES(parse_config_text("model.e1_hidden = 12,,8\n", "c"), ConfigError,
                           MessageMatches(ContainsSubstring("list")));
    REQUIRE_THROWS_MATCHES(parse_config_text("train.k = 1\ntrain.k = 2\n", "c"), ConfigError,
                           MessageMatches(ContainsSubstring("duplicate")));
    REQUIRE_THROWS_MATCHES(parse_config_text("train.k =\n", "c"), ConfigError,
                           MessageMatches(ContainsSubstring("empty value")));
}

TEST_CASE("comments and blank lines are ignored") {
    const RunConfig cfg = parse_config_text(
        "# fully commented line\n"
        "\n"
        "train.batch = 32   # trailing comment\n"
        "   \t\n",
        "c");
    REQUIRE(cfg.train.batch == 32);
}

TEST_CASE("head keys replace the head list wholesale and must be contiguous") {
    const RunConfig cfg = parse_config_text(
        "model.head.0.prior = uniform\n"
        "model.head.0.z_dim = 3\n"
        "model.head.1.prior = gaussian\n"
        "model.head.1.hidden = 16,16\n",
        "c");
    REQUIRE(cfg.model.heads.size() == 2);
    REQUIRE(cfg.model.heads[0].prior == PriorKind::Uniform);
    REQUIRE(cfg.model.heads[0].z_dim == 3);
    REQUIRE(cfg.model.heads[1].prior == PriorKind::Gaussian);
    REQUIRE(cfg.model.heads[1].hidden == std::vector<int>{16, 16});

    REQUIRE_THROWS_MATCHES(
        parse_config_text("model.head.0.z_dim = 2\nmodel.head.2.z_dim = 2\n", "c"), ConfigError,
        MessageMatches(ContainsSubstring("model.head.2.z_dim")));
}

TEST_CASE("semantic validation rejects out-of-range settings") {
    REQUIRE_THROWS_AS(parse_config_text("train.k = 0\n", "c"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("train.lambda = -0.5\n", "c"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("train.batch = 0\n", "c"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("data.kind = blah\n", "c"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("train.stage2_recon = middle\n", "c"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("data.kind = file\n", "c"), ConfigError);  // no path
}

TEST_CASE("large lambda triggers an advisory warning") {
    REQUIRE(config_warnings(parse_config_text("train.lambda = 0.05\n", "c")).size() == 1);
    REQUIRE(config_warnings(default_config("ring")).empty());
}

TEST_CASE("'none' hidden list yields a single-layer net") {
    const RunConfig cfg = parse_config_text("model.d1_hidden = none\n", "c");
    REQUIRE(cfg.model.d1_hidden.empty());
    const SwaeModel m = make_model(cfg.model, 3);
    REQUIRE(m.d1.spec.layer_widths == std::vector<int>{2, 1});
}
