#include "refinekit/io.hpp"

#include "refinekit/error.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace refinekit {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::uint8_t> read_binary(const fs::path& path)
{
    auto text = read_file(path);
    return std::vector<std::uint8_t>(text.begin(), text.end());
}

void write_file(const fs::path& path, std::string_view bytes)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw FormatError("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out)
            throw FormatError("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines)
{
    std::string text;
    for (const auto& l : lines) {
        text += l;
        text.push_back('\n');
    }
    write_file(path, text);
}

std::vector<std::string> read_lines(const fs::path& path)
{
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty())
            lines.push_back(line);
    return lines;
}

} // namespace refinekit
