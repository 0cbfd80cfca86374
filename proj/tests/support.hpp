#pragma once

// Helpers shared by the unit and acceptance tests.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("brc-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
}

inline void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// IDX3 image file of n 28x28 images filled with `fill`.
inline std::vector<unsigned char> idx_images(std::uint32_t n, unsigned char fill, std::uint32_t magic = 0x00000803) {
    std::vector<unsigned char> b;
    put_be32(b, magic);
    put_be32(b, n);
    put_be32(b, 28);
    put_be32(b, 28);
    b.insert(b.end(), static_cast<std::size_t>(n) * 784, fill);
    return b;
}

inline std::vector<unsigned char> idx_labels(std::uint32_t n, std::uint32_t magic = 0x00000801) {
    std::vector<unsigned char> b;
    put_be32(b, magic);
    put_be32(b, n);
    for (std::uint32_t i = 0; i < n; ++i) b.push_back(static_cast<unsigned char>(i % 10));
    return b;
}

inline std::filesystem::path mnist_dir() {
#ifdef BRC_TEST_MNIST_DIR
    return BRC_TEST_MNIST_DIR;
#else
    return {};
#endif
}

}  // namespace testing
