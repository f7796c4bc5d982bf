#include "refinekit/render/image.hpp"

#include "refinekit/error.hpp"
#include "refinekit/io.hpp"

#include <png.h>

#include <cstring>

namespace refinekit::render {

std::vector<std::uint8_t> encode_png(const RasterImage& img)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
        throw FormatError(std::string("PNG encode: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
        throw FormatError(std::string("PNG encode: ") + image.message);
    out.resize(size);
    return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw FormatError(std::string("PNG decode: ") + image.message);
    image.format = PNG_FORMAT_RGB;
    if (image.width < 1 || image.height < 1) {
        png_image_free(&image);
        throw FormatError("PNG decode: empty image");
    }
    RasterImage img(static_cast<int>(image.width), static_cast<int>(image.height));
    png_color background{255, 255, 255};
    if (!png_image_finish_read(&image, &background, img.pixels.data(), 0, nullptr))
        throw FormatError(std::string("PNG decode: ") + image.message);
    return img;
}

void write_png(const std::filesystem::path& path, const RasterImage& img)
{
    auto bytes = encode_png(img);
    write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

RasterImage read_png(const std::filesystem::path& path)
{
    auto bytes = read_binary(path);
    return decode_png(bytes);
}

} // namespace refinekit::render
