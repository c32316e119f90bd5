#include "psafe/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace psafe {

namespace {

void append_g17(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string polyline_to_csv(const BorderPolyline& poly, int d) {
    std::string out;
    out += poly.closed ? "# closed=true\n" : "# closed=false\n";
    if (!poly.note.empty()) out += "# note=" + poly.note + "\n";
    out += "section_id,index";
    for (int j = 1; j <= d; ++j) out += ",x" + std::to_string(j);
    out += ",p_hat,se_p";
    for (int j = 1; j <= d; ++j) out += ",grad" + std::to_string(j);
    out += "\n";

    for (const auto& bp : poly.points) {
        out += std::to_string(bp.section_id) + "," + std::to_string(bp.index);
        for (int j = 0; j < d; ++j) {
            out += ',';
            append_g17(out, bp.x[j]);
        }
        out += ',';
        append_g17(out, bp.p_hat);
        out += ',';
        append_g17(out, bp.se_p);
        for (int j = 0; j < d; ++j) {
            out += ',';
            append_g17(out, bp.grad.size() > j ? bp.grad[j] : 0.0);
        }
        out += '\n';
    }
    return out;
}

BorderPolyline polyline_from_csv(const std::string& text) {
    BorderPolyline poly;
    std::istringstream in(text);
    std::string line;
    int d = -1;
    bool seen_header = false;

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("closed=true") != std::string::npos) poly.closed = true;
            const auto np = line.find("note=");
            if (np != std::string::npos) poly.note = line.substr(np + 5);
            continue;
        }
        if (!seen_header) {
            // header row: section_id,index,x1..xd,p_hat,se_p,grad1..gradd
            const auto cols = split_csv_line(line);
            if (cols.size() < 6 || cols[0] != "section_id" || cols[1] != "index")
                throw std::invalid_argument("polyline CSV: unexpected header row");
            d = static_cast<int>(cols.size() - 4) / 2;
            seen_header = true;
            continue;
        }
        const auto cols = split_csv_line(line);
        if (static_cast<int>(cols.size()) != 4 + 2 * d)
            throw std::invalid_argument("polyline CSV: wrong column count on a data row");
        BorderPoint bp;
        bp.section_id = std::stoi(cols[0]);
        bp.index = std::stoi(cols[1]);
        bp.x = Vec(d);
        bp.grad = Vec(d);
        bp.se_grad = Vec::Zero(d);
        for (int j = 0; j < d; ++j) bp.x[j] = std::stod(cols[2 + j]);
        bp.p_hat = std::stod(cols[2 + d]);
        bp.se_p = std::stod(cols[3 + d]);
        for (int j = 0; j < d; ++j) bp.grad[j] = std::stod(cols[4 + d + j]);
        poly.points.push_back(std::move(bp));
    }
    if (!seen_header) throw std::invalid_argument("polyline CSV: missing header row");
    return poly;
}

void write_polyline_csv(const std::string& path, const BorderPolyline& poly, int d) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << polyline_to_csv(poly, d);
}

BorderPolyline read_polyline_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return polyline_from_csv(ss.str());
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

const char* section_status_name(SectionStatus s) {
    switch (s) {
        case SectionStatus::Walked: return "walked";
        case SectionStatus::Empty: return "empty";
        case SectionStatus::OutsideRegion: return "outside_region";
    }
    return "unknown";
}

} // namespace psafe
