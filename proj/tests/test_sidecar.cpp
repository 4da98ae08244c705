#include <doctest.h>

#include <fstream>
#include <random>

#include "magic_markup/sidecar.hpp"
#include "support.hpp"

using namespace magic_markup;
using nlohmann::json;
using test_support::code_of;

namespace {

DocumentView sample() {
    Annotation a{"a1", make_segment("boy alad.", TextPoint{4}, TextPoint{8}), "a name", std::nullopt};
    Annotation b{"a2", make_segment("boy alad.", TextPoint{0}, TextPoint{0}), "start", "marks the opening"};
    b.metadata = {{"author", "kim"}, {"tags", {"x", "y"}}};
    return make_view("story.txt", "boy alad.", {a, b});
}

}  // namespace

TEST_SUITE("sidecar") {

TEST_CASE("json layout") {
    const json j = sidecar_to_json(sample());
    CHECK(j.at("version") == 1);
    CHECK(j.at("document") == "story.txt");
    CHECK(j.at("digest").at("algo") == "sha256");
    CHECK(j.at("annotations").size() == 2);
    CHECK(j.at("annotations")[0].at("start") == 4);
    CHECK(j.at("annotations")[0].at("anchor_text") == "alad");
    CHECK(j.at("annotations")[0].at("intent").is_null());
    CHECK(j.at("annotations")[1].at("metadata").at("tags")[1] == "y");
}

TEST_CASE("save and load round trip") {
    test_support::TempDir dir;
    const auto doc = dir / "story.txt";
    std::ofstream(doc) << "boy alad.";
    const DocumentView v = sample();
    save_view(v, default_sidecar_path(doc));
    CHECK(std::filesystem::exists(dir / "story.txt.annotations.json"));
    CHECK(load_view(doc, default_sidecar_path(doc)) == v);
    // no temporary files left behind
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
    CHECK(files == 2);
}

TEST_CASE("stale and mismatched sidecars") {
    const json j = sidecar_to_json(sample());
    CHECK(code_of([&] { sidecar_from_json(j, "boy alad!", LoadMode::Strict); }) == ErrorCode::StaleSidecar);
    const DocumentView loose = sidecar_from_json(j, "boy alad!", LoadMode::AllowStale);
    CHECK(loose.annotations.size() == 2);

    json tampered = j;
    tampered["annotations"][0]["anchor_text"] = "alaf";
    CHECK(code_of([&] { sidecar_from_json(tampered, "boy alad.", LoadMode::Strict); }) ==
          ErrorCode::AnchorMismatch);
}

TEST_CASE("schema violations") {
    const json good = sidecar_to_json(sample());
    auto expect_schema = [](json j) {
        CHECK(code_of([&] { sidecar_from_json(j, "boy alad.", LoadMode::Strict); }) == ErrorCode::SchemaError);
    };
    json j = good;
    j["version"] = 2;
    expect_schema(j);
    j = good;
    j.erase("digest");
    expect_schema(j);
    j = good;
    j["annotations"][0].erase("content");
    expect_schema(j);
    j = good;
    j["annotations"][0]["start"] = -1;
    expect_schema(j);
    j = good;
    j["annotations"][0]["start"] = "4";
    expect_schema(j);
    j = good;
    j["annotations"][0]["intent"] = 3;
    expect_schema(j);
    j = good;
    j["annotations"][0]["metadata"] = json::array();
    expect_schema(j);
    j = good;
    j["digest"]["algo"] = "md5";
    expect_schema(j);
    expect_schema(json::array());
}

TEST_CASE("missing files are I/O errors") {
    test_support::TempDir dir;
    CHECK(code_of([&] { load_view(dir / "nope.txt", dir / "nope.json"); }) == ErrorCode::IoError);
}

TEST_CASE("random views survive serialization") {
    std::mt19937 rng(11);
    for (int i = 0; i < 200; ++i) {
        const std::string doc = oracle::random_text(rng, 30);
        std::vector<Annotation> annotations;
        for (int k = 0; k < 3; ++k) {
            Annotation a{"id" + std::to_string(k), test_support::random_segment(rng, doc),
                         oracle::random_text(rng, 5), std::nullopt};
            if (k == 1) a.intent = oracle::random_text(rng, 5);
            annotations.push_back(a);
        }
        const DocumentView v = make_view("doc", doc, annotations);
        const std::string text = sidecar_to_json(v).dump(2);
        CHECK(sidecar_from_json(json::parse(text), doc, LoadMode::Strict) == v);
    }
}

}
