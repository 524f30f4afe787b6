#include "iprar/index/index.hpp"

#include "helpers.hpp"
#include "iprar/providers/provider.hpp"
#include "iprar/util/error.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace iprar;
using corpus::Chunk;
using corpus::ChunkLevel;

namespace {

std::vector<Chunk> make_chunks(ChunkLevel level,
                               const std::vector<std::pair<std::string, std::string>>& rows) {
    std::vector<Chunk> out;
    for (const auto& [id, text] : rows) {
        Chunk c;
        c.chunk_id = id;
        c.doc_id = id.substr(0, id.find('#'));
        c.level = level;
        c.text = text;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<const Chunk*> ptrs(const std::vector<Chunk>& chunks) {
    std::vector<const Chunk*> p;
    for (const auto& c : chunks) p.push_back(&c);
    return p;
}

}  // namespace

TEST_CASE("vector index build validates its inputs") {
    providers::HashingEmbedder emb(16);
    std::vector<const Chunk*> empty;
    CHECK_THROWS_AS(index::VectorIndex::build(empty, ChunkLevel::Abstract, emb),
                    InvalidArgumentError);

    auto wrong_level = make_chunks(ChunkLevel::FullText, {{"d1#f0000", "alpha beta"}});
    auto p = ptrs(wrong_level);
    CHECK_THROWS_AS(index::VectorIndex::build(p, ChunkLevel::Abstract, emb),
                    InvalidArgumentError);

    auto dupes = make_chunks(ChunkLevel::Abstract,
                             {{"d1#a0000", "alpha"}, {"d1#a0000", "beta"}});
    auto dp = ptrs(dupes);
    CHECK_THROWS_AS(index::VectorIndex::build(dp, ChunkLevel::Abstract, emb),
                    InvalidArgumentError);
}

TEST_CASE("vector index stores unit rows and survives a save/load round-trip") {
    providers::HashingEmbedder emb(32);
    auto chunks = make_chunks(ChunkLevel::Abstract, {{"d1#a0000", "cisplatin kidney injury"},
                                                     {"d2#a0000", "gene expression atlas"},
                                                     {"d3#a0000", "tumor immune evasion"}});
    auto p = ptrs(chunks);
    auto idx = index::VectorIndex::build(p, ChunkLevel::Abstract, emb);
    CHECK(idx.size() == 3);
    CHECK(idx.dims() == 32);
    CHECK(idx.embedder_id() == emb.id());
    for (std::size_t row = 0; row < idx.size(); ++row) {
        double norm = 0.0;
        for (std::size_t d = 0; d < idx.dims(); ++d) {
            float v = idx.vectors()[row * idx.dims() + d];
            norm += static_cast<double>(v) * v;
        }
        CHECK(std::abs(norm - 1.0) < 1e-5);
    }

    auto dir = testutil::scratch_dir("vecidx");
    idx.save(dir);
    auto loaded = index::VectorIndex::load(dir, ChunkLevel::Abstract);
    CHECK(loaded.chunk_ids() == idx.chunk_ids());
    CHECK(loaded.vectors() == idx.vectors());
    CHECK(loaded.embedder_id() == idx.embedder_id());
    CHECK(loaded.dims() == idx.dims());
}

TEST_CASE("loading a missing vector index names the fix") {
    auto dir = testutil::scratch_dir("novecidx");
    CHECK_THROWS_WITH_AS(index::VectorIndex::load(dir, ChunkLevel::FullText),
                         doctest::Contains("run `index` first"), MissingArtifactError);
}

TEST_CASE("vector_search ranks by cosine, clamps negatives, breaks ties by id") {
    // Hand-built embedder: chunk texts map to fixed 2-d vectors, so the
    // expected ordering is known exactly.
    testutil::StubEmbedder emb(2, {{"north", {1.0f, 0.0f}},
                                   {"northeast", {0.7071068f, 0.7071068f}},
                                   {"east", {0.0f, 1.0f}},
                                   {"south", {-1.0f, 0.001f}},
                                   {"query", {1.0f, 0.0f}}});

    auto chunks = make_chunks(ChunkLevel::Abstract, {{"d1#a0000", "north"},
                                                     {"d2#a0000", "northeast"},
                                                     {"d3#a0000", "east"},
                                                     {"d4#a0000", "south"}});
    auto p = ptrs(chunks);
    auto idx = index::VectorIndex::build(p, ChunkLevel::Abstract, emb);

    auto hits = index::vector_search(idx, "query", 4, emb, index::Channel::QuestionAbstract);
    REQUIRE(hits.size() == 4);
    CHECK(hits[0].chunk_id == "d1#a0000");
    CHECK(hits[0].similarity == doctest::Approx(1.0));
    CHECK(hits[0].rank == 1);
    CHECK(hits[1].chunk_id == "d2#a0000");
    CHECK(hits[1].similarity == doctest::Approx(0.7071068).epsilon(1e-5));
    // "east" scores 0 exactly and "south" has a negative cosine clamped to 0;
    // the tie breaks by ascending chunk_id.
    CHECK(hits[2].chunk_id == "d3#a0000");
    CHECK(hits[2].similarity == doctest::Approx(0.0));
    CHECK(hits[3].chunk_id == "d4#a0000");
    CHECK(hits[3].similarity == doctest::Approx(0.0));
    CHECK(hits[3].channel == index::Channel::QuestionAbstract);

    // k larger than the index yields everything; k smaller truncates.
    CHECK(index::vector_search(idx, "query", 10, emb, index::Channel::QuestionAbstract).size() == 4);
    CHECK(index::vector_search(idx, "query", 2, emb, index::Channel::QuestionAbstract).size() == 2);
    CHECK_THROWS_AS(index::vector_search(idx, "query", 0, emb, index::Channel::QuestionAbstract),
                    InvalidArgumentError);
}

TEST_CASE("vector_search refuses an embedder that does not match the index") {
    providers::HashingEmbedder emb16(16);
    providers::HashingEmbedder emb32(32);
    auto chunks = make_chunks(ChunkLevel::Abstract, {{"d1#a0000", "alpha"}});
    auto p = ptrs(chunks);
    auto idx = index::VectorIndex::build(p, ChunkLevel::Abstract, emb16);
    CHECK_THROWS_WITH_AS(
        index::vector_search(idx, "alpha", 1, emb32, index::Channel::QuestionAbstract),
        doctest::Contains("embedder mismatch"), InvalidArgumentError);
}

TEST_CASE("keyword index tokenizes, folds case and answers postings") {
    auto chunks = make_chunks(ChunkLevel::Abstract,
                              {{"d1#a0000", "Cisplatin resistance in Gastric cancer."},
                               {"d2#a0000", "EGFR mutations and cisplatin."}});
    auto p = ptrs(chunks);
    auto idx = index::KeywordIndex::build(p, ChunkLevel::Abstract);
    REQUIRE(idx.postings("cisplatin") != nullptr);
    CHECK(*idx.postings("cisplatin") ==
          std::vector<std::string>{"d1#a0000", "d2#a0000"});
    REQUIRE(idx.postings("egfr") != nullptr);
    CHECK(*idx.postings("egfr") == std::vector<std::string>{"d2#a0000"});
    CHECK(idx.postings("EGFR") == nullptr);   // postings are stored case-folded
    CHECK(idx.postings("absent") == nullptr);

    auto dir = testutil::scratch_dir("kwidx");
    idx.save(dir);
    auto loaded = index::KeywordIndex::load(dir, ChunkLevel::Abstract);
    CHECK(loaded.token_count() == idx.token_count());
    REQUIRE(loaded.postings("gastric") != nullptr);
    CHECK(*loaded.postings("gastric") == *idx.postings("gastric"));

    auto missing = testutil::scratch_dir("nokwidx");
    CHECK_THROWS_AS(index::KeywordIndex::load(missing, ChunkLevel::Abstract),
                    MissingArtifactError);
}

TEST_CASE("keyword_search scores by fraction of matched keyword groups") {
    auto chunks = make_chunks(
        ChunkLevel::Abstract,
        {{"d1#a0000", "cisplatin induces apoptosis in gastric cancer"},
         {"d2#a0000", "stomach cancer cells resist platinum drugs"},
         {"d3#a0000", "apoptosis pathways reviewed"},
         {"d4#a0000", "unrelated astronomy text"}});
    auto p = ptrs(chunks);
    auto idx = index::KeywordIndex::build(p, ChunkLevel::Abstract);

    std::vector<std::string> keywords = {"cisplatin", "gastric cancer", "apoptosis"};
    std::map<std::string, std::vector<std::string>> synonyms = {
        {"gastric cancer", {"stomach cancer"}}};

    auto hits = index::keyword_search(idx, keywords, synonyms, 10,
                                      index::Channel::KeywordAbstract);
    // d1 matches all three groups; d2 matches "gastric cancer" via its
    // synonym (1/3); d3 matches "apoptosis" (1/3); d4 matches nothing and is
    // excluded entirely.
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].chunk_id == "d1#a0000");
    CHECK(hits[0].similarity == doctest::Approx(1.0));
    CHECK(hits[1].chunk_id == "d2#a0000");
    CHECK(hits[1].similarity == doctest::Approx(1.0 / 3.0));
    CHECK(hits[2].chunk_id == "d3#a0000");
    CHECK(hits[2].similarity == doctest::Approx(1.0 / 3.0));
    CHECK(hits[1].rank == 2);

    // Multi-token terms require every token: "gastric" alone in d3 would not
    // match the "gastric cancer" group, and partial-word matches never count.
    auto none = index::keyword_search(idx, {"gastric astronomy"}, {}, 10,
                                      index::Channel::KeywordAbstract);
    CHECK(none.empty());

    CHECK_THROWS_AS(
        index::keyword_search(idx, {}, {}, 10, index::Channel::KeywordAbstract),
        InvalidArgumentError);
    CHECK_THROWS_AS(
        index::keyword_search(idx, keywords, synonyms, 0, index::Channel::KeywordAbstract),
        InvalidArgumentError);
}

TEST_CASE("channel names round-trip") {
    for (auto c : index::kAllChannels) {
        CHECK(index::channel_from_string(index::to_string(c)) == c);
    }
    CHECK_THROWS_AS(index::channel_from_string("sideways"), InvalidArgumentError);
}
