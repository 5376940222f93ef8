#include "genaug/image_io.hpp"

#include <cmath>
#include <fstream>

#include "genaug/errors.hpp"

namespace genaug {

namespace {

// next whitespace-delimited token, skipping '#' comments
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok += static_cast<char>(ch);
    }
    return tok;
}

} // namespace

Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open image: " + path);
    if (next_token(in) != "P6") throw ValidationError(path + ": not a binary PPM (P6)");
    std::size_t w, h, maxval;
    try {
        w = std::stoul(next_token(in));
        h = std::stoul(next_token(in));
        maxval = std::stoul(next_token(in));
    } catch (const std::exception&) {
        throw ValidationError(path + ": malformed PPM header");
    }
    if (maxval != 255) throw ValidationError(path + ": only maxval 255 is supported");

    std::vector<char> bytes(w * h * 3);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw ValidationError(path + ": truncated pixel data");

    Image img(h, w, 3);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.data.data[i] = static_cast<double>(static_cast<unsigned char>(bytes[i])) / 255.0;
    return img;
}

void write_ppm(const std::string& path, const Image& img) {
    img.validate("write_ppm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write image: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                // 1-channel images are written with the value replicated
                double v = img.at(y, x, img.channels == 3 ? c : 0);
                out.put(static_cast<char>(std::lround(v * 255.0)));
            }
}

} // namespace genaug
