#include "crowdsight/frame.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace crowdsight {

namespace fs = std::filesystem;

void validate_frame(const Frame& frame) {
    if (frame.width < 8 || frame.height < 8)
        throw DataError("frame dimensions must be at least 8x8, got " +
                        format_int(frame.width) + "x" + format_int(frame.height));
    if (frame.data.size() != static_cast<std::size_t>(frame.width) * frame.height)
        throw DataError("frame data length does not match dimensions");
    for (double v : frame.data)
        if (!(v >= 0.0 && v <= 1.0))
            throw DataError("frame contains a luminance value outside [0,1]");
}

Frame make_frame(int width, int height, int index, double fill) {
    Frame f;
    f.width = width;
    f.height = height;
    f.index = index;
    f.data.assign(static_cast<std::size_t>(width) * height, fill);
    validate_frame(f);
    return f;
}

void validate_sequence(const VideoSequence& seq) {
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const Frame& f = seq.frames[i];
        validate_frame(f);
        if (f.index != static_cast<int>(i))
            throw DataError("sequence frame indices must run 0..n-1");
        if (f.width != seq.width() || f.height != seq.height())
            throw DataError("sequence frames must share one resolution");
    }
    if (!seq.frame_labels.empty() && seq.frame_labels.size() != seq.frames.size())
        throw DataError("frame_labels must have one entry per frame");
}

bool natural_less(const std::string& a, const std::string& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
        const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
        if (da && db) {
            std::size_t i2 = i, j2 = j;
            while (i2 < a.size() && std::isdigit(static_cast<unsigned char>(a[i2]))) ++i2;
            while (j2 < b.size() && std::isdigit(static_cast<unsigned char>(b[j2]))) ++j2;
            // Compare the digit runs by value: strip leading zeros, then by
            // length, then lexically.
            std::size_t ia = i, jb = j;
            while (ia < i2 - 1 && a[ia] == '0') ++ia;
            while (jb < j2 - 1 && b[jb] == '0') ++jb;
            const std::size_t la = i2 - ia, lb = j2 - jb;
            if (la != lb) return la < lb;
            const int cmp = a.compare(ia, la, b, jb, lb);
            if (cmp != 0) return cmp < 0;
            i = i2;
            j = j2;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    return (a.size() - i) < (b.size() - j);
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

namespace {

// Reads one PGM token, skipping whitespace and # comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (!std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            break;
        }
    }
    while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
    return tok;
}

Frame read_pgm(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    const std::string magic = pgm_token(in);
    if (magic != "P5" && magic != "P2") throw DataError(file.string() + ": not a PGM file");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(pgm_token(in));
        height = std::stoi(pgm_token(in));
        maxval = std::stoi(pgm_token(in));
    } catch (const std::exception&) {
        throw DataError(file.string() + ": malformed PGM header");
    }
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw DataError(file.string() + ": malformed PGM header");

    Frame f;
    f.width = width;
    f.height = height;
    f.data.resize(static_cast<std::size_t>(width) * height);
    const std::size_t n = f.data.size();

    if (magic == "P2") {
        for (std::size_t k = 0; k < n; ++k) {
            long v = 0;
            if (!(in >> v)) throw DataError(file.string() + ": truncated PGM data");
            f.data[k] = static_cast<double>(v) / maxval;
        }
    } else if (maxval < 256) {
        std::vector<unsigned char> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw DataError(file.string() + ": truncated PGM data");
        for (std::size_t k = 0; k < n; ++k) f.data[k] = raw[k] / static_cast<double>(maxval);
    } else {
        // 16-bit samples, big-endian per the PGM spec.
        std::vector<unsigned char> raw(n * 2);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw DataError(file.string() + ": truncated PGM data");
        for (std::size_t k = 0; k < n; ++k) {
            const unsigned v = (static_cast<unsigned>(raw[2 * k]) << 8) | raw[2 * k + 1];
            f.data[k] = static_cast<double>(v) / maxval;
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// PNG (via libpng); any color type is expanded to 8-bit RGB(A) then reduced
// to BT.601 luminance.
// ---------------------------------------------------------------------------

struct PngCloser {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

Frame read_png(const fs::path& file) {
    PngCloser c;
    c.fp = std::fopen(file.c_str(), "rb");
    if (!c.fp) throw DataError("cannot open " + file.string());

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, c.fp) != 8 || png_sig_cmp(sig, 0, 8))
        throw DataError(file.string() + ": not a PNG file");

    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw DataError(file.string() + ": png reader init failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw DataError(file.string() + ": png reader init failed");

    if (setjmp(png_jmpbuf(c.png))) throw DataError(file.string() + ": undecodable PNG");

    png_init_io(c.png, c.fp);
    png_set_sig_bytes(c.png, 8);
    png_read_info(c.png, c.info);

    png_set_expand(c.png);
    png_set_strip_16(c.png);
    png_set_gray_to_rgb(c.png);
    png_read_update_info(c.png, c.info);

    const png_uint_32 width = png_get_image_width(c.png, c.info);
    const png_uint_32 height = png_get_image_height(c.png, c.info);
    const int channels = png_get_channels(c.png, c.info);
    if (channels < 3) throw DataError(file.string() + ": unexpected PNG channel layout");

    std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
    Frame f;
    f.width = static_cast<int>(width);
    f.height = static_cast<int>(height);
    f.data.resize(static_cast<std::size_t>(width) * height);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(c.png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < width; ++x) {
            const unsigned char* px = &row[static_cast<std::size_t>(x) * channels];
            const double lum = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            f.data[static_cast<std::size_t>(y) * width + x] = lum / 255.0;
        }
    }
    png_read_end(c.png, nullptr);
    return f;
}

bool glob_match(const std::string& pattern, const std::string& name) {
    // Translate the glob to a regex; only * and ? are special.
    std::string re;
    for (char ch : pattern) {
        switch (ch) {
            case '*': re += ".*"; break;
            case '?': re += "."; break;
            default:
                if (std::isalnum(static_cast<unsigned char>(ch)))
                    re += ch;
                else {
                    re += '\\';
                    re += ch;
                }
        }
    }
    return std::regex_match(name, std::regex(re));
}

}  // namespace

Frame read_image(const fs::path& file) {
    const std::string ext = file.extension().string();
    std::string lower;
    for (char ch : ext) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    Frame f = (lower == ".png") ? read_png(file) : read_pgm(file);
    for (double& v : f.data) v = std::clamp(v, 0.0, 1.0);
    return f;
}

void write_pgm(const Frame& frame, const fs::path& file) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw DataError("cannot write " + file.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
    std::vector<unsigned char> raw(frame.data.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const double v = std::clamp(frame.data[k], 0.0, 1.0);
        raw[k] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("cannot write " + file.string());
}

VideoSequence load_sequence(const fs::path& dir, const std::string& pattern, int crop_top) {
    if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (glob_match(pattern, name)) names.push_back(name);
    }
    if (names.size() < 2)
        throw DataError(dir.string() + ": need at least 2 matching frames, found " +
                        format_int(static_cast<long long>(names.size())));
    std::sort(names.begin(), names.end(), natural_less);

    VideoSequence seq;
    seq.source_id = dir.filename().string();
    for (const std::string& name : names) {
        Frame f = read_image(dir / name);
        if (crop_top > 0) {
            if (crop_top > f.height - 8)
                throw DataError(name + ": crop_top leaves fewer than 8 rows");
            f.data.erase(f.data.begin(), f.data.begin() + static_cast<std::ptrdiff_t>(crop_top) * f.width);
            f.height -= crop_top;
        }
        f.index = static_cast<int>(seq.frames.size());
        if (!seq.frames.empty() &&
            (f.width != seq.width() || f.height != seq.height()))
            throw DataError(name + ": resolution " + format_int(f.width) + "x" +
                            format_int(f.height) + " differs from " + format_int(seq.width()) +
                            "x" + format_int(seq.height()));
        seq.frames.push_back(std::move(f));
    }
    validate_sequence(seq);
    return seq;
}

void save_sequence(const VideoSequence& seq, const fs::path& dir) {
    fs::create_directories(dir);
    char name[32];
    for (const Frame& f : seq.frames) {
        std::snprintf(name, sizeof(name), "frame_%06d.pgm", f.index);
        write_pgm(f, dir / name);
    }
}

}  // namespace crowdsight
