#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gowergraph::csv {

struct Document {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 reader: comma separated, double-quote escaping, optional UTF-8 BOM,
/// LF or CRLF line endings. Every row must have as many cells as the header.
Document read(const std::filesystem::path& path);
Document parse(const std::string& text);

std::string escape(const std::string& cell);

class Writer {
public:
    void row(const std::vector<std::string>& cells);
    const std::string& str() const { return out_; }

private:
    std::string out_;
};

}  // namespace gowergraph::csv

namespace gowergraph {

void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace gowergraph
