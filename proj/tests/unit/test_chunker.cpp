#include "support.hpp"

using namespace gendfir;
using namespace testing_support;

TEST(Chunker, TableVGivesTwentyFiveChunksOf208) {
    ChunkingConfig cfg;
    cfg.max_length = 208;
    auto chunks = chunk_document(unauthorised_access_document(), cfg);
    ASSERT_EQ(chunks.size(), 25u);
    for (const auto& c : chunks) {
        EXPECT_EQ(utf8::scalar_count(c.text), 208u);
        EXPECT_EQ(utf8::trim(c.text), c.stripped_text);
    }
    // Frozen from tests/oracles/char_counts.py.
    std::size_t longest = 0;
    for (const auto& c : chunks) longest = std::max(longest, c.char_count);
    EXPECT_EQ(longest, 183u);
    EXPECT_EQ(incident_total_length(chunks), 3907u);
    EXPECT_EQ(chunks[0].token_estimate, 37u);
    EXPECT_EQ(chunks[1].token_estimate, 39u);
    EXPECT_EQ(chunks[2].token_estimate, 43u);
}

TEST(Chunker, FirstWindowsEventLength) {
    auto segs = parse_incident_document(read_file(fixture("windows_security_document.txt")), ".\n\n");
    ASSERT_EQ(segs.size(), 6u);
    EXPECT_EQ(event_length(segs[0]), 176u);
}

TEST(Chunker, MaxLengthDerivedFromLongestEvent) {
    ChunkingConfig cfg;
    cfg.splitter = " / ";
    auto chunks = chunk_document("short / a much longer event / mid", cfg);
    ASSERT_EQ(chunks.size(), 3u);
    for (const auto& c : chunks) EXPECT_EQ(c.text.size(), std::string("a much longer event").size());
}

TEST(Chunker, PaddingCountsScalarsNotBytes) {
    ChunkingConfig cfg;
    cfg.max_length = 6;
    cfg.splitter = " / ";
    auto chunks = chunk_document("\xC3\xA9t\xC3\xA9", cfg);
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_EQ(chunks[0].char_count, 3u);
    EXPECT_EQ(utf8::scalar_count(chunks[0].text), 6u);
    EXPECT_EQ(chunks[0].text, "\xC3\xA9t\xC3\xA9   ");
}

TEST(Chunker, EventTooLongNamesOrdinal) {
    ChunkingConfig cfg;
    cfg.max_length = 5;
    cfg.splitter = " / ";
    try {
        chunk_document("ok / toolong", cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EventTooLong);
        EXPECT_NE(std::string(e.what()).find("event 2"), std::string::npos);
    }
}

TEST(Chunker, TokenBudget) {
    ChunkingConfig cfg;
    cfg.token_capacity = 2;
    cfg.c_avg = 4;
    cfg.splitter = " / ";
    EXPECT_EQ(code_of([&] { chunk_document("12345678 / 123456789", cfg); }), ErrorCode::TokenBudgetExceeded);
    EXPECT_NO_THROW(chunk_document("12345678 / 1234567", cfg));
}

TEST(Chunker, InvalidConfig) {
    ChunkingConfig cfg;
    cfg.max_length = 2049;  // 512 * 4 + 1
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
    cfg.max_length = 2048;
    EXPECT_NO_THROW(cfg.validate());
    cfg.c_avg = 0;
    EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::InvalidConfig);
    ChunkingConfig empty_splitter;
    empty_splitter.splitter.clear();
    EXPECT_EQ(code_of([&] { empty_splitter.validate(); }), ErrorCode::InvalidConfig);
}

TEST(Chunker, EstimateTokensRoundsUp) {
    EXPECT_EQ(estimate_tokens("", 4), 0u);
    EXPECT_EQ(estimate_tokens("a", 4), 1u);
    EXPECT_EQ(estimate_tokens("abcd", 4), 1u);
    EXPECT_EQ(estimate_tokens("abcde", 4), 2u);
    EXPECT_EQ(estimate_tokens("123456789", 4), 3u);
    EXPECT_EQ(estimate_tokens(std::string(208, 'x'), 4), 52u);
    EXPECT_EQ(code_of([] { estimate_tokens("a", 0); }), ErrorCode::InvalidArgument);
}

TEST(Chunker, MaxEventLength) {
    EXPECT_EQ(max_event_length(std::vector<std::string>{"ab", "abcd", "a"}), 4u);
    EXPECT_EQ(code_of([] { max_event_length(std::vector<std::string>{}); }), ErrorCode::EmptyInput);
}

TEST(Chunker, ExactFitHasNoPadding) {
    ChunkingConfig cfg;
    cfg.max_length = 5;
    cfg.splitter = " / ";
    auto chunks = chunk_document("abcde", cfg);
    ASSERT_EQ(chunks.size(), 1u);
    EXPECT_EQ(chunks[0].text, "abcde");
}

TEST(Chunker, TotalLengthIsSumOfStrippedLengths) {
    EXPECT_EQ(incident_total_length(std::vector<Chunk>{}), 0u);
    std::vector<Chunk> chunks(2);
    chunks[0].char_count = 10;
    chunks[1].char_count = 15;
    EXPECT_EQ(incident_total_length(chunks), 25u);
}

TEST(Chunker, DocumentProperties) {
    std::mt19937_64 rng(7);
    const std::string alphabet = "abc xyz:,0123";
    for (int trial = 0; trial < 300; ++trial) {
        std::string doc;
        std::size_t n = rng() % 15;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t len = rng() % 30;
            for (std::size_t j = 0; j < len; ++j) doc.push_back(alphabet[rng() % alphabet.size()]);
            doc += ". ";
        }
        ChunkingConfig cfg;
        auto segs = parse_incident_document(doc, cfg.splitter);
        if (segs.empty()) {
            EXPECT_TRUE(chunk_document(doc, cfg).empty());
            continue;
        }
        auto chunks = chunk_document(doc, cfg);
        ASSERT_EQ(chunks.size(), segs.size());
        std::size_t width = max_event_length(segs);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            EXPECT_EQ(chunks[i].stripped_text, segs[i]);
            EXPECT_EQ(chunks[i].ordinal, i + 1);
            EXPECT_EQ(utf8::scalar_count(chunks[i].text), width);
            EXPECT_EQ(utf8::trim(chunks[i].text), chunks[i].stripped_text);
        }
    }
}

TEST(Chunker, SerializeRoundTrip) {
    ChunkingConfig cfg;
    cfg.splitter = " / ";
    auto chunks = chunk_document("tab\there / back\\slash / plain", cfg);
    auto back = deserialize_chunks(serialize_chunks(chunks), chunks[0].text.size());
    EXPECT_EQ(back, chunks);
}

TEST(Chunker, DeserializeRejectsInconsistentCounts) {
    EXPECT_EQ(code_of([] { deserialize_chunks("1\t9\t1\tabc\n"); }), ErrorCode::CorruptFile);
    EXPECT_EQ(code_of([] { deserialize_chunks("1\t3\n"); }), ErrorCode::CorruptFile);
    EXPECT_EQ(code_of([] { deserialize_chunks("x\t3\t1\tabc\n"); }), ErrorCode::CorruptFile);
}
