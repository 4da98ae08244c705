// Regenerates the JSON fixtures under tests/data from the hand-written cases
// below. Usage: make_fixtures <tests/data directory>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "magic_markup/benchmark.hpp"
#include "magic_markup/eval.hpp"
#include "magic_markup/model_client.hpp"
#include "magic_markup/retag.hpp"
#include "magic_markup/sidecar.hpp"

using namespace magic_markup;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Source {
    const char* id;
    Language language;
    SnippetType type;
    const char* original;
    const char* updated;
    json answer;
    const char* expected;         // category without expansion
    const char* expected_expand;  // category with --expand-retry
};

json answer(const std::string& text, int start, int end, int occurrence = 1) {
    return {{"1", text}, {"2", start}, {"3", end}, {"4", occurrence}};
}

const std::vector<Source>& taxonomy() {
    static const std::vector<Source> cases = {
        {"constant-moved", Language::Python, SnippetType::Constant,
         "TAX_RATE = ★0.08★\n"
         "\n"
         "def total(prices):\n"
         "    subtotal = sum(prices)\n"
         "    return subtotal * (1 + TAX_RATE)\n",
         "import math\n"
         "\n"
         "TAX_RATE = ★0.08★\n"
         "SHIPPING = 4.99\n"
         "\n"
         "def total(prices):\n"
         "    subtotal = sum(prices)\n"
         "    return math.ceil(subtotal * (1 + TAX_RATE) + SHIPPING)\n",
         answer("0.08", 3, 3), "ExactMatch", "ExactMatch"},
        {"call-rewritten", Language::Javascript, SnippetType::FunctionCall,
         "function greet(user) {\n"
         "  const name = user.name.trim();\n"
         "  ★console.log(\"Hello, \" + name)★;\n"
         "}\n",
         "function greet(user, logger = console) {\n"
         "  const name = user.name.trim();\n"
         "  if (!name) {\n"
         "    return;\n"
         "  }\n"
         "  ★logger.log(`Hello, ${name}`)★;\n"
         "}\n",
         answer("logger.log(`Hello, ${name}`)", 6, 6), "ExactMatch", "ExactMatch"},
        {"loop-condition", Language::C, SnippetType::LoopCondition,
         "#include <stdio.h>\n"
         "\n"
         "int main(void) {\n"
         "    int n = 10;\n"
         "    int i = 0;\n"
         "    while (★i < n★) {\n"
         "        printf(\"%d\\n\", i);\n"
         "        i++;\n"
         "    }\n"
         "    return 0;\n"
         "}\n",
         "#include <stdio.h>\n"
         "\n"
         "#define LIMIT 10\n"
         "\n"
         "int main(void) {\n"
         "    int i = 0;\n"
         "    while (★i < LIMIT★) {\n"
         "        printf(\"%d\\n\", i * i);\n"
         "        i++;\n"
         "    }\n"
         "    return 0;\n"
         "}\n",
         answer("i < LIMIT", 7, 7), "ExactMatch", "ExactMatch"},
        {"jsx-price", Language::JSX, SnippetType::Subexpression,
         "function PropertyListing({ listing }) {\n"
         "  return (\n"
         "    <div className=\"listing\">\n"
         "      <h2>{listing.title}</h2>\n"
         "      <p className=\"price\">★{listing.price}★</p>\n"
         "    </div>\n"
         "  );\n"
         "}\n",
         "function PropertyListing({ listing, currency }) {\n"
         "  const formatted = formatPrice(listing.price, currency);\n"
         "  return (\n"
         "    <div className=\"listing\">\n"
         "      <h2>{listing.title}</h2>\n"
         "      <p className=\"address\">{listing.address}</p>\n"
         "      <p className=\"price\">★{formatted}★</p>\n"
         "    </div>\n"
         "  );\n"
         "}\n",
         answer("{formatted}", 7, 7), "ExactMatch", "ExactMatch"},
        {"racket-body", Language::Racket, SnippetType::LoopBody,
         "#lang racket\n"
         "\n"
         "(define (sum-squares lst)\n"
         "  (for/fold ([acc 0]) ([x lst])\n"
         "    ★(+ acc (* x x))★))\n"
         "\n"
         "(sum-squares '(1 2 3))\n",
         "#lang racket\n"
         "\n"
         "(define (square x) (* x x))\n"
         "\n"
         "(define (sum-squares lst)\n"
         "  (for/fold ([acc 0])\n"
         "            ([x lst])\n"
         "    ★(+ acc\n"
         "       (square x))★))\n"
         "\n"
         "(displayln (sum-squares '(1 2 3)))\n",
         answer("(+ acc\n       (square x))", 8, 9), "ExactMatch", "ExactMatch"},
        {"indent-dropped", Language::Python, SnippetType::VariableAssignment,
         "def average(values):\n"
         "    if not values:\n"
         "        return 0\n"
         "★    total = sum(values)★\n"
         "    return total / len(values)\n",
         "def average(values):\n"
         "    if not values:\n"
         "        return 0.0\n"
         "    # guard above keeps len() non-zero\n"
         "★    total = sum(values)★\n"
         "    return total / len(values)\n",
         answer("total = sum(values)", 5, 5), "WhitespaceOnly", "WhitespaceOnly"},
        {"second-print", Language::Python, SnippetType::FunctionCall,
         "def report(items):\n"
         "    count = len(items)\n"
         "    ★print(count)★\n"
         "    return count\n",
         "def report(items):\n"
         "    count = len(items)\n"
         "    print(count)\n"
         "    items = [i for i in items if i]\n"
         "    count = len(items)\n"
         "    ★print(count)★\n"
         "    return count\n",
         answer("print(count)", 3, 6, 1), "WrongOccurrence", "WrongOccurrence"},
        {"stale-line-number", Language::Javascript, SnippetType::VariableAssignment,
         "const config = {\n"
         "  host: \"localhost\",\n"
         "  ★retries: 3★,\n"
         "  timeout: 1000,\n"
         "};\n",
         "const config = {\n"
         "  host: \"localhost\",\n"
         "  port: 8080,\n"
         "  ★retries: 3★,\n"
         "  timeout: 1000,\n"
         "};\n",
         answer("retries: 3", 3, 3), "OffByOneLine", "ExactMatch"},
        {"copied-old-text", Language::Javascript, SnippetType::LoopBody,
         "function cartTotal(items) {\n"
         "  let total = 0;\n"
         "  for (const item of items) {\n"
         "    ★total += item.smallPrice★;\n"
         "  }\n"
         "  return total;\n"
         "}\n",
         "function cartTotal(items, size) {\n"
         "  let total = 0;\n"
         "  for (const item of items) {\n"
         "    ★total += item.prices[size]★;\n"
         "  }\n"
         "  return total;\n"
         "}\n",
         answer("total += item.smallPrice", 4, 4), "WrongText", "WrongText"},
        {"far-off-lines", Language::C, SnippetType::FunctionCall,
         "#include <stdlib.h>\n"
         "\n"
         "int *make_buffer(int size) {\n"
         "    int *buf = ★malloc(size * sizeof(int))★;\n"
         "    return buf;\n"
         "}\n",
         "#include <stdlib.h>\n"
         "#include <string.h>\n"
         "\n"
         "/* Allocates a zeroed buffer of `size` ints. */\n"
         "int *make_buffer(int size) {\n"
         "    int *buf = ★calloc(size, sizeof(int))★;\n"
         "    if (buf == NULL) {\n"
         "        return NULL;\n"
         "    }\n"
         "    return buf;\n"
         "}\n",
         answer("calloc(size, sizeof(int))", 10, 10), "NoMatch", "NoMatch"},
    };
    return cases;
}

BenchmarkCase make_case(const std::string& id, const GenSpec& spec, const std::string& original,
                        const std::string& updated) {
    CaseDraft draft;
    draft.id = id;
    draft.spec = spec;
    draft.original_marked = original;
    draft.updated_marked = updated;
    auto verdict = validate_case(draft);
    if (auto* rejection = std::get_if<Rejection>(&verdict)) {
        throw std::runtime_error(id + ": " + rejection->note);
    }
    return std::get<BenchmarkCase>(verdict);
}

// Widens every whitespace run: indentation doubles, inner spaces double,
// and lines gain a trailing space. Delimiters are untouched.
std::string reformat(const std::string& marked) {
    std::string out;
    bool line_start = true;
    for (std::size_t i = 0; i < marked.size(); ++i) {
        const char c = marked[i];
        if (c == '\n') {
            out += " \n";
            line_start = true;
            continue;
        }
        if (c == ' ') {
            out += line_start ? "  " : (i + 1 < marked.size() && marked[i + 1] == ' ' ? " " : "  ");
            continue;
        }
        line_start = false;
        out.push_back(c);
    }
    return out;
}

void write_taxonomy(const fs::path& dir) {
    Suite suite{"taxonomy", {}};
    Transcript transcript{"taxonomy", {}};
    json expected = json::object();
    double latency = 3.1;
    for (const auto& src : taxonomy()) {
        BenchmarkCase c = make_case(src.id, GenSpec{src.language, src.type, false, kDefaultDelimiter},
                                    src.original, src.updated);
        c.snippet_description = std::string(to_string(src.type)) + " fixture";
        const ChatRequest request = build_retag_prompt(c.original_clean, c.gold_original, c.updated_clean, RetagConfig{});
        ChatResponse response;
        response.text = src.answer.dump();
        response.latency_seconds = latency;
        response.usage = TokenUsage{(request.user_text.size() + 3) / 4, (response.text.size() + 3) / 4};
        latency += 0.3;
        transcript.entries.push_back(TranscriptEntry{request_digest(request), 0, request, response});
        expected[src.id] = {{"default", src.expected}, {"expand_retry", src.expected_expand}};
        suite.cases.push_back(std::move(c));
    }
    fs::create_directories(dir);
    suite.save(dir / "suite.json");
    transcript.save(dir / "transcript.json");
    write_file_atomic(dir / "expected.json", expected.dump(2) + "\n");
}

void write_baseline(const fs::path& dir) {
    Suite identity{"identity", {}};
    Suite whitespace{"whitespace", {}};
    for (const auto& src : taxonomy()) {
        const GenSpec spec{src.language, src.type, false, kDefaultDelimiter};
        for (const char* text : {src.original, src.updated}) {
            const std::string id = std::string(src.id) + (text == src.original ? "-a" : "-b");
            identity.cases.push_back(make_case(id, spec, text, text));
            whitespace.cases.push_back(make_case(id, spec, text, reformat(text)));
        }
    }
    fs::create_directories(dir);
    identity.save(dir / "identity.json");
    whitespace.save(dir / "whitespace.json");
}

void write_generator(const fs::path& dir) {
    json drafts = json::array();
    auto add = [&](const char* id, const char* expected, Language language, const std::string& original,
                   const std::string& updated, json metadata = json::object()) {
        drafts.push_back({
            {"id", id},
            {"expected", expected},
            {"spec", to_json(GenSpec{language, SnippetType::LoopBody, false, kDefaultDelimiter})},
            {"original_marked", original},
            {"updated_marked", updated},
            {"metadata", metadata},
        });
    };

    const std::string loop =
        "function cartTotal(items) {\n"
        "  let total = 0;\n"
        "  for (const item of items) {\n"
        "    ★total += item.price;★\n"
        "  }\n"
        "  return total;\n"
        "}\n";
    add("well-formed", "accepted", Language::Javascript, loop,
        "function cartTotal(items) {\n"
        "  let total = 0;\n"
        "  for (const item of items) {\n"
        "    if (item.price > 0) {\n"
        "      ★total += item.price;★\n"
        "    }\n"
        "  }\n"
        "  return total;\n"
        "}\n");
    add("missing-updated-delimiters", "MissingDelimiters", Language::Javascript, loop,
        "function cartTotal(items) {\n"
        "  let total = 0;\n"
        "  for (const item of items) {\n"
        "    total += item.price * item.quantity;\n"
        "  }\n"
        "  return total;\n"
        "}\n");
    add("single-original-delimiter", "MissingDelimiters", Language::Javascript,
        "function cartTotal(items) {\n"
        "  let total = 0;\n"
        "  for (const item of items) {\n"
        "    ★total += item.price;\n"
        "  }\n"
        "  return total;\n"
        "}\n",
        loop);
    add("reduce-refactor-empty", "SegmentRemoved", Language::Javascript, loop,
        "function cartTotal(items) {\n"
        "  ★★return items.reduce((total, item) => total + item.price, 0);\n"
        "}\n");
    add("reduce-refactor-flagged", "SegmentRemoved", Language::Javascript, loop,
        "function cartTotal(items) {\n"
        "  return ★items.reduce((total, item) => total + item.price, 0)★;\n"
        "}\n",
        {{"segment_eliminated", true}});
    add("duplicated-pairs", "DuplicateSegments", Language::Python,
        "def checkout(cart):\n"
        "    price = ★apply_tax(cart.subtotal)★\n"
        "    return price\n",
        "def checkout(cart):\n"
        "    if cart.express:\n"
        "        return ★apply_tax(cart.subtotal)★ + 10\n"
        "    return ★apply_tax(cart.subtotal)★\n");
    add("duplicated-flagged", "DuplicateSegments", Language::Python,
        "def checkout(cart):\n"
        "    price = ★apply_tax(cart.subtotal)★\n"
        "    return price\n",
        "def checkout(cart):\n"
        "    if cart.express:\n"
        "        return apply_tax(cart.subtotal) + 10\n"
        "    return ★apply_tax(cart.subtotal)★\n",
        {{"duplication_flagged", true}});
    add("repeated-anchor-unflagged", "accepted", Language::Python,
        "def checkout(cart):\n"
        "    price = ★apply_tax(cart.subtotal)★\n"
        "    return price\n",
        "def checkout(cart):\n"
        "    if cart.express:\n"
        "        return apply_tax(cart.subtotal) + 10\n"
        "    return ★apply_tax(cart.subtotal)★\n");
    fs::create_directories(dir);
    write_file_atomic(dir / "drafts.json", drafts.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <tests/data>\n";
        return 2;
    }
    const fs::path root = argv[1];
    write_taxonomy(root / "taxonomy");
    write_baseline(root / "baseline");
    write_generator(root / "generator");
    std::cout << "fixtures written to " << root.string() << "\n";
    return 0;
}
