// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/model_io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fixcert {

namespace {

using nlohmann::json;

std::size_t line_of(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n' ? 1 : 0;
    return line;
}

const json& field(const json& doc, const char* name) {
    auto it = doc.find(name);
    if (it == doc.end()) throw ParseError(std::string("missing field '") + name + "'", 0, name);
    return *it;
}

long count_field(const json& doc, const char* name) {
    const json& f = field(doc, name);
    if (!f.is_number_integer() || f.get<long>() < 1) {
        throw ParseError(std::string("field '") + name + "' must be a positive integer", 0, name);
    }
    return f.get<long>();
}

double number(const json& j, const char* name) {
    if (!j.is_number()) throw ParseError(std::string("non-numeric entry in '") + name + "'", 0, name);
    return j.get<double>();
}

// Accepts a list of rows or a flat row-major list.
Matrix matrix_field(const json& doc, const char* name, long rows, long cols) {
    const json& f = field(doc, name);
    if (!f.is_array()) throw ParseError(std::string("field '") + name + "' must be a list", 0, name);
    Matrix m(rows, cols);
    if (!f.empty() && f.front().is_array()) {
        if (static_cast<long>(f.size()) != rows) {
            throw ShapeMismatch(std::string(name) + " has " + std::to_string(f.size()) +
                                " rows, expected " + std::to_string(rows));
        }
        for (long i = 0; i < rows; ++i) {
            const json& row = f[i];
            if (!row.is_array() || static_cast<long>(row.size()) != cols) {
                throw ShapeMismatch(std::string(name) + " row " + std::to_string(i) +
                                    " has wrong length, expected " + std::to_string(cols));
            }
            for (long j = 0; j < cols; ++j) m(i, j) = number(row[j], name);
        }
        return m;
    }
    if (static_cast<long>(f.size()) != rows * cols) {
        throw ShapeMismatch(std::string(name) + " has " + std::to_string(f.size()) +
                            " entries, expected " + std::to_string(rows * cols));
    }
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) m(i, j) = number(f[i * cols + j], name);
    }
    return m;
}

Vector vector_field(const json& doc, const char* name, long n) {
    const json& f = field(doc, name);
    if (!f.is_array()) throw ParseError(std::string("field '") + name + "' must be a list", 0, name);
    if (static_cast<long>(f.size()) != n) {
        throw ShapeMismatch(std::string(name) + " has " + std::to_string(f.size()) +
                            " entries, expected " + std::to_string(n));
    }
    Vector v(n);
    for (long i = 0; i < n; ++i) v(i) = number(f[i], name);
    return v;
}

std::string fmt(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("cannot serialize non-finite value");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_matrix(std::ostringstream& os, const char* name, const Matrix& m) {
    os << "  \"" << name << "\": [";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? ",\n    [" : "\n    [");
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << fmt(m(i, j));
        os << "]";
    }
    os << "\n  ]";
}

void write_vector(std::ostringstream& os, const char* name, const Vector& v) {
    os << "  \"" << name << "\": [";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << fmt(v(i));
    os << "]";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_real(const std::string& tok, double& out) {
    const std::string t = trim(tok);
    if (t.empty()) return false;
    char* end = nullptr;
    errno = 0;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && errno != ERANGE && std::isfinite(out);
}

bool parse_int(const std::string& tok, int& out) {
    const std::string t = trim(tok);
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size() && !t.empty();
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

MonDeqParams parse_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), line_of(text, e.byte));
    }
    if (!doc.is_object()) throw ParseError("model file must hold a JSON object", 1);

    const json& ver = field(doc, "format_version");
    if (!ver.is_string() || ver.get<std::string>() != "1") {
        throw ParseError("unsupported format_version", 0, "format_version");
    }
    const long p = count_field(doc, "p");
    const long q = count_field(doc, "q");
    const long r = count_field(doc, "r");
    MonDeqParams mp;
    mp.m = number(field(doc, "m"), "m");
    if (!(mp.m > 0.0)) throw ParseError("field 'm' must be positive", 0, "m");
    mp.P = matrix_field(doc, "P", p, p);
    mp.Q = matrix_field(doc, "Q", p, p);
    mp.U = matrix_field(doc, "U", p, q);
    mp.bias = vector_field(doc, "bias", p);
    mp.V = matrix_field(doc, "V", r, p);
    mp.v = vector_field(doc, "v", r);
    return mp;
}

std::string dump_model(const MonDeqParams& mp) {
    std::ostringstream os;
    os << "{\n  \"format_version\": \"1\",\n";
    os << "  \"p\": " << mp.p() << ",\n  \"q\": " << mp.q() << ",\n  \"r\": " << mp.r() << ",\n";
    os << "  \"m\": " << fmt(mp.m) << ",\n";
    write_matrix(os, "P", mp.P);
    os << ",\n";
    write_matrix(os, "Q", mp.Q);
    os << ",\n";
    write_matrix(os, "U", mp.U);
    os << ",\n";
    write_vector(os, "bias", mp.bias);
    os << ",\n";
    write_matrix(os, "V", mp.V);
    os << ",\n";
    write_vector(os, "v", mp.v);
    os << "\n}\n";
    return os.str();
}

MonDeqParams load_model(const std::string& path) {
    return parse_model(read_file(path));
}

void save_model(const MonDeqParams& params, const std::string& path) {
    const std::string text = dump_model(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

std::vector<LabeledPoint> parse_dataset(const std::string& text, int q) {
    std::vector<LabeledPoint> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        std::vector<double> vals;
        bool numeric = cells.size() >= 2;
        for (std::size_t i = 0; numeric && i + 1 < cells.size(); ++i) {
            double d;
            numeric = parse_real(cells[i], d);
            vals.push_back(d);
        }
        int label = 0;
        numeric = numeric && parse_int(cells.back(), label);
        if (!numeric) {
            if (first) {
                first = false;
                continue;  // header
            }
            throw ParseError("malformed dataset row " + std::to_string(lineno), lineno);
        }
        first = false;
        if (q < 0) q = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != q) {
            throw ParseError("dataset row " + std::to_string(lineno) + " has " +
                                 std::to_string(vals.size()) + " features, expected " +
                                 std::to_string(q),
                             lineno);
        }
        rows.emplace_back(Eigen::Map<Vector>(vals.data(), q), label);
    }
    return rows;
}

std::vector<LabeledPoint> load_dataset(const std::string& path, int q) {
    return parse_dataset(read_file(path), q);
}

Vector parse_vector(const std::string& text) {
    std::vector<double> vals;
    for (const auto& cell : split(text)) {
        double d;
        if (!parse_real(cell, d)) throw ParseError("not a number: '" + trim(cell) + "'");
        vals.push_back(d);
    }
    if (vals.empty()) throw ParseError("empty vector");
    return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

} // namespace fixcert
