#include "brc/rng.hpp"

namespace brc {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t substream(std::uint64_t parent, std::string_view tag,
                        std::initializer_list<std::uint64_t> indices) noexcept {
    // FNV-1a over the tag keeps the derivation independent of std::hash.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    std::uint64_t s = splitmix64(parent ^ splitmix64(h));
    for (auto i : indices) s = splitmix64(s ^ splitmix64(i + 0x632BE59BD9B4E019ULL));
    return s;
}

}  // namespace brc
