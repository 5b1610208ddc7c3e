// Copyright 2026 The ctlmap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian fixed-width encoders for the index and model snapshot files.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ctlmap/error.hpp"

namespace ctlmap::bin {

static_assert(std::endian::native == std::endian::little,
              "snapshot encoders assume a little-endian host");

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void str(const std::string& s)
    {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void f64s(std::span<const double> v)
    {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(double));
    }
    void check() const
    {
        if (!out_) {
            throw Error(ErrorCode::IoError, "write failed");
        }
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    void bytes(void* p, std::size_t n)
    {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw Error(ErrorCode::ParseError, "unexpected end of file");
        }
    }
    std::uint32_t u32()
    {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64()
    {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64()
    {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::string str()
    {
        const auto n = u64();
        if (n > (1ull << 32)) {
            throw Error(ErrorCode::ParseError, "string length out of range");
        }
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    std::vector<double> f64s()
    {
        const auto n = u64();
        if (n > (1ull << 34) / sizeof(double)) {
            throw Error(ErrorCode::ParseError, "tensor length out of range");
        }
        std::vector<double> v(n);
        bytes(v.data(), n * sizeof(double));
        return v;
    }

private:
    std::istream& in_;
};

}  // namespace ctlmap::bin
