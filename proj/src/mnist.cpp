#include <fstream>
#include <iterator>

#include "brc/errors.hpp"
#include "brc/patterns.hpp"

namespace brc {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Cursor over a byte buffer that reports the offset of whatever it fails on.
struct IdxReader {
    const std::vector<unsigned char>& buf;
    std::string name;
    std::size_t pos = 0;

    std::uint32_t be32(const char* field) {
        if (pos + 4 > buf.size()) {
            throw FormatError(name + ": truncated header reading " + field + " at offset " +
                              std::to_string(pos));
        }
        std::uint32_t v = (std::uint32_t{buf[pos]} << 24) | (std::uint32_t{buf[pos + 1]} << 16) |
                          (std::uint32_t{buf[pos + 2]} << 8) | std::uint32_t{buf[pos + 3]};
        pos += 4;
        return v;
    }

    void need(std::size_t bytes) const {
        if (pos + bytes > buf.size()) {
            throw FormatError(name + ": truncated payload at offset " + std::to_string(buf.size()) +
                              " (expected " + std::to_string(pos + bytes) + " bytes)");
        }
    }
};

}  // namespace

std::vector<MnistImage> load_mnist_idx(const std::filesystem::path& images_path,
                                       const std::filesystem::path& labels_path) {
    const auto img_buf = slurp(images_path);
    const auto lbl_buf = slurp(labels_path);

    IdxReader img{img_buf, images_path.filename().string()};
    if (auto m = img.be32("magic"); m != kImageMagic) {
        throw FormatError(img.name + ": bad magic number at offset 0 (got " + std::to_string(m) +
                          ", expected 2051)");
    }
    const std::uint32_t n_images = img.be32("image count");
    const std::uint32_t rows = img.be32("row count");
    const std::uint32_t cols = img.be32("column count");
    if (rows != 28 || cols != 28) {
        throw FormatError(img.name + ": expected 28x28 images at offset 8, got " + std::to_string(rows) +
                          "x" + std::to_string(cols));
    }

    IdxReader lbl{lbl_buf, labels_path.filename().string()};
    if (auto m = lbl.be32("magic"); m != kLabelMagic) {
        throw FormatError(lbl.name + ": bad magic number at offset 0 (got " + std::to_string(m) +
                          ", expected 2049)");
    }
    const std::uint32_t n_labels = lbl.be32("label count");
    if (n_labels != n_images) {
        throw FormatError("count mismatch at offset 4: " + std::to_string(n_images) + " images vs " +
                          std::to_string(n_labels) + " labels");
    }

    img.need(std::size_t{n_images} * 784);
    lbl.need(n_labels);

    std::vector<MnistImage> out(n_images);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        auto first = img_buf.begin() + static_cast<std::ptrdiff_t>(img.pos + std::size_t{i} * 784);
        std::copy(first, first + 784, out[i].pixels.begin());
        const unsigned label = lbl_buf[lbl.pos + i];
        if (label > 9) {
            throw FormatError(lbl.name + ": label " + std::to_string(label) + " out of range at offset " +
                              std::to_string(lbl.pos + i));
        }
        out[i].label = static_cast<int>(label);
    }
    return out;
}

}  // namespace brc
