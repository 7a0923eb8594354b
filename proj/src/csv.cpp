#include "gowergraph/csv.hpp"

#include <fstream>
#include <sstream>

#include "gowergraph/core.hpp"

namespace gowergraph::csv {

Document parse(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string cell;
    bool quoted = false;
    bool cell_started = false;

    std::size_t i = 0;
    if (text.rfind("\xEF\xBB\xBF", 0) == 0) {
        i = 3;
    }

    auto end_record = [&] {
        record.push_back(std::move(cell));
        cell.clear();
        bool blank = record.size() == 1 && record[0].empty();
        if (!blank) {
            records.push_back(std::move(record));
        }
        record.clear();
        cell_started = false;
    };

    for (; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!cell_started || cell.empty()) {
                    quoted = true;
                    cell_started = true;
                } else {
                    cell.push_back(c);
                }
                break;
            case ',':
                record.push_back(std::move(cell));
                cell.clear();
                cell_started = false;
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                break;
            default:
                cell.push_back(c);
                cell_started = true;
        }
    }
    if (quoted) {
        throw Error(Errc::io, "unterminated quoted cell");
    }
    if (cell_started || !cell.empty() || !record.empty()) {
        end_record();
    }

    Document doc;
    if (records.empty()) {
        throw Error(Errc::io, "empty CSV: header row required");
    }
    doc.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != doc.header.size()) {
            throw Error(Errc::io, "CSV row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                      " cells, header has " + std::to_string(doc.header.size()));
        }
        doc.rows.push_back(std::move(records[r]));
    }
    return doc;
}

Document read(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) {
        return cell;
    }
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

void Writer::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_.push_back(',');
        out_ += escape(cells[i]);
    }
    out_.push_back('\n');
}

}  // namespace gowergraph::csv

namespace gowergraph {

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::io, "cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw Error(Errc::io, "short write to " + path.string());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace gowergraph
