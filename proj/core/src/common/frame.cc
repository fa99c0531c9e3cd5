// Copyright 2026 The vidplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vidplan/common/frame.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "vidplan/common/error.h"

namespace vidplan {

std::vector<double> ToGray(const Frame& frame) {
  std::vector<double> gray(static_cast<size_t>(frame.height) * frame.width);
  for (size_t i = 0; i < gray.size(); ++i) {
    const double* p = &frame.pixels[i * 3];
    gray[i] = (p[0] + p[1] + p[2]) / 3.0;
  }
  return gray;
}

void RequireSameShape(const Frame& a, const Frame& b) {
  if (!a.SameShape(b)) {
    throw ShapeError("frame shapes differ: " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " +
                     std::to_string(b.height) + "x" + std::to_string(b.width));
  }
}

namespace {

// Cursor over the header of a netpbm file; skips whitespace and comments.
class PnmHeader {
 public:
  explicit PnmHeader(const std::string& bytes) : bytes_(bytes) {}

  int NextInt() {
    SkipSpace();
    size_t start = pos_;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) throw FormatError("malformed pnm header");
    return std::stoi(bytes_.substr(start, pos_ - start));
  }

  size_t pos() const { return pos_; }
  void Advance() { ++pos_; }

 private:
  void SkipSpace() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  size_t pos_ = 2;
};

}  // namespace

Frame ReadPnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw FormatError("not a netpbm file: " + path);
  }
  const char kind = bytes[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6') {
    throw FormatError("unsupported netpbm variant P" + std::string(1, kind));
  }
  PnmHeader header(bytes);
  const int width = header.NextInt();
  const int height = header.NextInt();
  const int maxval = header.NextInt();
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    throw FormatError("invalid netpbm dimensions in " + path);
  }
  const bool gray = (kind == '2' || kind == '5');
  const bool binary = (kind == '5' || kind == '6');
  const int channels = gray ? 1 : 3;
  const size_t count = static_cast<size_t>(width) * height * channels;
  std::vector<int> samples(count);

  if (binary) {
    header.Advance();  // single whitespace after maxval
    const size_t bps = maxval > 255 ? 2 : 1;
    size_t pos = header.pos();
    if (bytes.size() < pos + count * bps) {
      throw FormatError("truncated netpbm raster: " + path);
    }
    for (size_t i = 0; i < count; ++i) {
      if (bps == 1) {
        samples[i] = static_cast<unsigned char>(bytes[pos++]);
      } else {
        samples[i] = (static_cast<unsigned char>(bytes[pos]) << 8) |
                     static_cast<unsigned char>(bytes[pos + 1]);
        pos += 2;
      }
    }
  } else {
    std::istringstream rest(bytes.substr(header.pos()));
    for (size_t i = 0; i < count; ++i) {
      if (!(rest >> samples[i])) {
        throw FormatError("truncated netpbm raster: " + path);
      }
    }
  }

  Frame frame(height, width);
  for (size_t p = 0; p < static_cast<size_t>(width) * height; ++p) {
    for (int c = 0; c < 3; ++c) {
      const int s = gray ? samples[p] : samples[p * 3 + c];
      frame.pixels[p * 3 + c] =
          std::clamp(static_cast<double>(s) / maxval, 0.0, 1.0);
    }
  }
  return frame;
}

void WritePpm(const Frame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path);
  out << "P6\n" << frame.width << " " << frame.height << "\n255\n";
  std::string raster(frame.pixels.size(), '\0');
  for (size_t i = 0; i < frame.pixels.size(); ++i) {
    const double v = std::clamp(frame.pixels[i], 0.0, 1.0);
    raster[i] = static_cast<char>(static_cast<int>(std::lround(v * 255.0)));
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("short write: " + path);
}

}  // namespace vidplan
