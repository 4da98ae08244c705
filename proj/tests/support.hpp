#pragma once

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "magic_markup/annotation.hpp"
#include "magic_markup/error.hpp"
#include "oracle.hpp"

namespace test_support {

/// The ErrorCode raised by fn; fails the test when nothing is raised.
template <class Fn>
magic_markup::ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const magic_markup::Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return magic_markup::ErrorCode::IoError;
}

/// A fresh directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("mm-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string data(const std::string& rel) { return std::string(MM_TEST_DATA) + "/" + rel; }

/// Random range segment of a non-empty document.
inline magic_markup::TextSegment random_segment(std::mt19937& rng, const std::string& doc) {
    const std::size_t n = oracle::decode(doc).size();
    std::uniform_int_distribution<std::size_t> pos(0, n);
    std::size_t a = pos(rng), b = pos(rng);
    if (a > b) std::swap(a, b);
    return magic_markup::make_segment(doc, magic_markup::TextPoint{a}, magic_markup::TextPoint{b});
}

}  // namespace test_support
