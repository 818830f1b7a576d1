#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fake_server.hpp"
#include "memattack/embedding.hpp"
#include "memattack/http_backend.hpp"

using namespace memattack;

namespace {

EmbedderConfig mock_config(std::size_t dim = 256, std::uint64_t seed = 0) {
  EmbedderConfig c;
  c.dim = dim;
  c.hash_seed = seed;
  return c;
}

EmbedderConfig http_config(const std::string& url) {
  EmbedderConfig c;
  c.mode = BackendMode::kHttp;
  c.base_url = url;
  c.timeout_seconds = 5.0;
  return c;
}

}  // namespace

TEST(MockEmbed, PureFunctionOfInput) {
  const auto a = embed("a", mock_config(256, 7));
  const auto b = embed("a", mock_config(256, 7));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.dim(), 256u);
}

TEST(MockEmbed, SeedChangesTheVector) {
  EXPECT_NE(embed("alpha beta gamma", mock_config(256, 1)), embed("alpha beta gamma", mock_config(256, 2)));
}

TEST(MockEmbed, WordOrderDoesNotMatter) {
  const auto cfg = mock_config();
  EXPECT_NEAR(cosine_similarity(embed("project successfully was completed The", cfg),
                                embed("The project was completed successfully", cfg)),
              1.0, 1e-9);
}

TEST(MockEmbed, SharedTokenGivesPartialSimilarity) {
  const auto cfg = mock_config();
  const double s = cosine_similarity(embed("alpha beta", cfg), embed("alpha gamma", cfg));
  EXPECT_GT(s, 0.0);
  EXPECT_LT(s, 1.0);
}

TEST(MockEmbed, UnitNormAndFinite) {
  const auto v = embed("Gina launched an ad campaign for her clothing store.", mock_config());
  double sq = 0.0;
  for (double x : v.values()) {
    ASSERT_TRUE(std::isfinite(x));
    sq += x * x;
  }
  EXPECT_NEAR(std::sqrt(sq), 1.0, 1e-12);
}

TEST(MockEmbed, TokenizationIgnoresCaseAndPunctuation) {
  const auto cfg = mock_config();
  EXPECT_EQ(embed("Hello, WORLD!", cfg), embed("hello world", cfg));
  EXPECT_EQ(embedding_tokens("It's 29-Jan"), (std::vector<std::string>{"it", "s", "29", "jan"}));
}

TEST(MockEmbed, EmptyTextRejected) {
  try {
    embed("   \t", mock_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(MockEmbed, PunctuationOnlyTextIsDegenerate) {
  try {
    embed("?!", mock_config());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateVector);
  }
}

TEST(EmbedderConfig, Validation) {
  EXPECT_THROW(Embedder(mock_config(4)), Error);
  EmbedderConfig http;
  http.mode = BackendMode::kHttp;
  http.base_url = " ";
  EXPECT_THROW(Embedder{http}, Error);
}

TEST(Cosine, Identity) {
  const EmbeddingVector v({0.3, -2.0, 7.5});
  EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-12);
}

TEST(Cosine, OrthogonalBasisVectors) {
  EXPECT_EQ(cosine_similarity(EmbeddingVector({1, 0, 0}), EmbeddingVector({0, 1, 0})), 0.0);
}

TEST(Cosine, FortyFiveDegrees) {
  EXPECT_NEAR(cosine_similarity(EmbeddingVector({1, 1, 0}), EmbeddingVector({1, 0, 0})), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(cosine_similarity(EmbeddingVector({1, 1, 0}), EmbeddingVector({1, 0, 0})), 0.7071, 1e-4);
}

TEST(Cosine, ExactlySymmetricAndClamped) {
  const auto cfg = mock_config();
  const char* texts[] = {"alpha", "alpha beta", "beta gamma delta", "the quick brown fox", "fox quick"};
  for (const char* x : texts) {
    for (const char* y : texts) {
      const auto a = embed(x, cfg);
      const auto b = embed(y, cfg);
      const double ab = cosine_similarity(a, b);
      EXPECT_EQ(ab, cosine_similarity(b, a));
      EXPECT_LE(ab, 1.0);
      EXPECT_GE(ab, -1.0);
    }
  }
}

TEST(Cosine, DimensionMismatch) {
  try {
    cosine_similarity(EmbeddingVector({1, 0}), EmbeddingVector({1, 0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(Cosine, ZeroNormOperand) {
  try {
    cosine_similarity(EmbeddingVector({0, 0}), EmbeddingVector({1, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateVector);
  }
}

TEST(EmbeddingVector, RejectsNonFinite) {
  EXPECT_THROW(EmbeddingVector({1.0, std::numeric_limits<double>::quiet_NaN()}), Error);
  EXPECT_THROW(EmbeddingVector({std::numeric_limits<double>::infinity()}), Error);
  EXPECT_THROW(EmbeddingVector(std::vector<double>{}), Error);
}

TEST(BaseUrl, SplitsOriginAndPrefix) {
  EXPECT_EQ(parse_base_url("http://localhost:11434"), (Endpoint{"http://localhost:11434", ""}));
  EXPECT_EQ(parse_base_url("http://host:1/proxy/"), (Endpoint{"http://host:1", "/proxy"}));
  EXPECT_THROW(parse_base_url("localhost:11434"), Error);
  EXPECT_THROW(parse_base_url("ftp://x"), Error);
  EXPECT_THROW(parse_base_url("http://"), Error);
}

TEST(HttpEmbed, SendsModelAndPromptAndPassesValuesThrough) {
  FakeLlmServer server;
  server.reply("/api/embeddings", 200, R"({"embedding": [0.125, -3.5, 1e-7, 42]})");
  server.start();

  const Embedder embedder(http_config(server.url()));
  const auto v = embedder.embed("hello there");
  EXPECT_EQ(std::vector<double>(v.values().begin(), v.values().end()),
            (std::vector<double>{0.125, -3.5, 1e-7, 42.0}));

  const auto bodies = server.bodies();
  ASSERT_EQ(bodies.size(), 1u);
  const auto sent = nlohmann::json::parse(bodies[0]);
  EXPECT_EQ(sent, (nlohmann::json{{"model", "nomic-embed-text"}, {"prompt", "hello there"}}));
  EXPECT_EQ(server.paths()[0], "/api/embeddings");
}

TEST(HttpEmbed, CachesByExactText) {
  FakeLlmServer server;
  server.reply("/api/embeddings", 200, R"({"embedding": [1, 2]})");
  server.start();
  const Embedder embedder(http_config(server.url()));
  embedder.embed("same");
  embedder.embed("same");
  embedder.embed("Same");
  EXPECT_EQ(server.bodies().size(), 2u);
}

TEST(HttpEmbed, PathPrefixIsHonoured) {
  FakeLlmServer server;
  server.reply("/proxy/api/embeddings", 200, R"({"embedding": [1]})");
  server.start();
  const Embedder embedder(http_config(server.url() + "/proxy"));
  EXPECT_EQ(embedder.embed("x").dim(), 1u);
}

namespace {

std::string http_error_for(const std::string& status_body, int status) {
  FakeLlmServer server;
  server.reply("/api/embeddings", status, status_body);
  server.start();
  const Embedder embedder(http_config(server.url()));
  try {
    embedder.embed("text");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
    return e.what();
  }
  ADD_FAILURE() << "expected BackendError";
  return "";
}

}  // namespace

TEST(HttpEmbed, NonSuccessStatus) { EXPECT_NE(http_error_for("{}", 500).find("status 500"), std::string::npos); }

TEST(HttpEmbed, MalformedJsonBody) { EXPECT_NE(http_error_for("not json", 200).find("malformed"), std::string::npos); }

TEST(HttpEmbed, MissingFieldIsNamed) {
  EXPECT_NE(http_error_for(R"({"vector": [1]})", 200).find("'embedding'"), std::string::npos);
}

TEST(HttpEmbed, NonNumericComponentIsNamed) {
  EXPECT_NE(http_error_for(R"({"embedding": [1, "x"]})", 200).find("embedding[1]"), std::string::npos);
}

TEST(HttpEmbed, EmptyVector) { EXPECT_NE(http_error_for(R"({"embedding": []})", 200).find("empty"), std::string::npos); }

TEST(HttpEmbed, TransportFailure) {
  auto config = http_config(closed_port_url());
  config.timeout_seconds = 0.5;
  const Embedder embedder(config);
  try {
    embedder.embed("text");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
    EXPECT_NE(std::string(e.what()).find("transport"), std::string::npos);
  }
}

TEST(HttpEmbed, RetriesAfterServerError) {
  FakeLlmServer server;
  int calls = 0;
  server.handle("/api/embeddings", [&calls](const httplib::Request&, httplib::Response& res) {
    res.status = ++calls == 1 ? 503 : 200;
    res.set_content(R"({"embedding": [0.5, 0.5]})", "application/json");
  });
  server.start();
  auto cfg = http_config(server.url());
  cfg.retries = 1;
  const Embedder embedder(cfg);
  EXPECT_EQ(embedder.embed("x").dim(), 2u);
  EXPECT_EQ(calls, 2);
}

TEST(HttpEmbed, ConcurrentCallersShareOneEmbedder) {
  FakeLlmServer server;
  server.handle("/api/embeddings", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const double len = static_cast<double>(body["prompt"].get<std::string>().size());
    res.set_content(nlohmann::json{{"embedding", {len, 1.0}}}.dump(), "application/json");
  });
  server.start();
  const Embedder embedder(http_config(server.url()));
  std::vector<std::thread> threads;
  std::vector<double> first(8);
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] { first[t] = embedder.embed(std::string(t + 1, 'x')).values()[0]; });
  }
  for (auto& th : threads) th.join();
  for (int t = 0; t < 8; ++t) EXPECT_EQ(first[t], t + 1);
}

TEST(HttpChat, RequestBodyMatchesWireFormat) {
  const auto body = LlmServerClient::chat_request("llama3.2:3b", "Hi", ChatOptions{0.1, 0.9, 1500});
  const auto expected = nlohmann::json::parse(R"({
    "model": "llama3.2:3b",
    "messages": [{"role": "user", "content": "Hi"}],
    "stream": false,
    "options": {"temperature": 0.1, "top_p": 0.9, "num_predict": 1500}
  })");
  EXPECT_EQ(body, expected);
}

TEST(HttpChat, ReadsMessageContent) {
  FakeLlmServer server;
  server.reply("/api/chat", 200, R"({"model": "m", "message": {"role": "assistant", "content": "  29 January  "}})");
  server.start();
  const LlmServerClient client(server.url(), 5.0);
  EXPECT_EQ(client.chat("m", "prompt", {}), "  29 January  ");
}

TEST(HttpChat, MissingContentIsBackendError) {
  FakeLlmServer server;
  server.reply("/api/chat", 200, R"({"message": {"role": "assistant"}})");
  server.start();
  const LlmServerClient client(server.url(), 5.0);
  try {
    client.chat("m", "p", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
    EXPECT_NE(std::string(e.what()).find("message.content"), std::string::npos);
  }
}
