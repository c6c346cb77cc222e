#include <gtest/gtest.h>

#include <map>

#include "qualnet/config.hpp"
#include "qualnet/error.hpp"
#include "support/fixtures.hpp"

using namespace qualnet;
namespace qt = qualnet::testing;
using nlohmann::json;

namespace {

config::EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const char* name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

const config::EnvLookup kNoEnv = env_of({});

std::string toml_error(const std::string& text) {
    try {
        config::parse_toml(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
        return e.what();
    }
    return "no error";
}

}  // namespace

TEST(Config, TomlSubset) {
    const auto doc = config::parse_toml(R"(
top = "root"   # trailing comment
[server]
name = 'literal \n kept'
escaped = "tab\there \"q\" é"
port = 8080
ratio = 0.25
neg = -3
on = true
list = ["a", 'b', 3]
hash = "# not a comment"
)");
    EXPECT_EQ(doc["top"], "root");
    const auto& s = doc["server"];
    EXPECT_EQ(s["name"], "literal \\n kept");
    EXPECT_EQ(s["escaped"], "tab\there \"q\" \xC3\xA9");
    EXPECT_EQ(s["port"], 8080);
    EXPECT_TRUE(s["port"].is_number_integer());
    EXPECT_DOUBLE_EQ(s["ratio"].get<double>(), 0.25);
    EXPECT_EQ(s["neg"], -3);
    EXPECT_EQ(s["on"], true);
    EXPECT_EQ(s["list"], json::array({"a", "b", 3}));
    EXPECT_EQ(s["hash"], "# not a comment");
}

TEST(Config, TomlErrorsCarryLineNumbers) {
    EXPECT_NE(toml_error("a = 1\nb = \n").find("line 2"), std::string::npos);
    EXPECT_NE(toml_error("[x\n").find("line 1"), std::string::npos);
    EXPECT_NE(toml_error("a = 1\n\n\nc = \"open\n").find("line 4"), std::string::npos);
    EXPECT_NE(toml_error("a = 1\na = 2\n").find("line 2"), std::string::npos);
    EXPECT_NE(toml_error("just words\n").find("line 1"), std::string::npos);
}

TEST(Config, DefaultsWhenEmpty) {
    const auto c = config::from_toml("", kNoEnv);
    EXPECT_EQ(c.bind, "127.0.0.1");
    EXPECT_EQ(c.port, 8080);
    EXPECT_EQ(c.provider, "mock");
    EXPECT_EQ(c.workers, 2u);
    EXPECT_FALSE(c.prompts_dir.has_value());
}

TEST(Config, ShippedFileLoads) {
    const auto c = config::load(qt::source_path("data/config/qualnet.toml"), kNoEnv);
    EXPECT_EQ(c.provider, "mock:data/fixtures/mock_script.json");
    EXPECT_EQ(c.parallelism, 4u);
    EXPECT_EQ(c.http.backoff, std::chrono::milliseconds(500));
    EXPECT_EQ(c.http.timeout, std::chrono::seconds(60));
    EXPECT_EQ(c.http.retries, 3);
}

TEST(Config, EnvironmentOverrides) {
    const std::string text = "[server]\nbind = \"0.0.0.0\"\nport = 9000\n[http]\napi_key = \"file\"\n";
    auto c = config::from_toml(text, env_of({{"QUALNET_BIND", "10.0.0.5:7000"}, {"QUALNET_API_KEY", "env"}}));
    EXPECT_EQ(c.bind, "10.0.0.5");
    EXPECT_EQ(c.port, 7000);
    EXPECT_EQ(c.http.api_key, "env");

    c = config::from_toml(text, env_of({{"QUALNET_BIND", "localhost"}}));
    EXPECT_EQ(c.bind, "localhost");
    EXPECT_EQ(c.port, 9000);
    EXPECT_EQ(c.http.api_key, "file");

    c = config::from_toml(text, env_of({{"QUALNET_BIND", "[::1]:7001"}}));
    EXPECT_EQ(c.bind, "[::1]");
    EXPECT_EQ(c.port, 7001);

    c = config::from_toml(text, env_of({{"QUALNET_BIND", "::1"}}));
    EXPECT_EQ(c.bind, "::1");
    EXPECT_EQ(c.port, 9000);

    EXPECT_THROW(config::from_toml(text, env_of({{"QUALNET_BIND", "host:notaport"}})), Error);
}

TEST(Config, RangeAndTypeChecks) {
    EXPECT_THROW(config::from_toml("[server]\nport = 70000\n", kNoEnv), Error);
    EXPECT_THROW(config::from_toml("[server]\nworkers = 0\n", kNoEnv), Error);
    EXPECT_THROW(config::from_toml("[server]\nport = \"80\"\n", kNoEnv), Error);
    EXPECT_THROW(config::from_toml("[pipeline]\nparallelism = 0\n", kNoEnv), Error);
    EXPECT_THROW(config::load("/nonexistent/qualnet.toml", kNoEnv), Error);
}
