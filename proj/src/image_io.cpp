#include "texfv/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "texfv/errors.hpp"

namespace texfv {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) fail("IoError", "cannot open " + path);
    return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    (void)msg;
    std::longjmp(*static_cast<std::jmp_buf*>(png_get_error_ptr(png)), 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

RgbImage load_png_rgb(std::FILE* f, const std::string& path) {
    std::jmp_buf jmp;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &jmp,
                                             png_error_fn, png_warning_fn);
    if (!png) fail("IoError", "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail("IoError", "libpng init failed");
    }

    std::vector<png_bytep> rows;
    RgbImage out;
    if (setjmp(jmp)) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("IoError", "corrupt PNG: " + path);
    }

    png_init_io(png, f);
    png_read_info(png, info);

    png_set_expand(png);            // palette/low-bit gray -> 8 bit
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail("UnsupportedFormat", "unexpected PNG channel layout: " + path);
    }

    out = RgbImage(int(w), int(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) {
        rows[y] = out.data.data() + std::size_t(3) * w * y;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jmp;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    std::longjmp(reinterpret_cast<JpegErrorMgr*>(cinfo->err)->jmp, 1);
}

RgbImage load_jpeg_rgb(std::FILE* f, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    err.pub.output_message = [](j_common_ptr) {};

    RgbImage out;
    if (setjmp(err.jmp)) {
        jpeg_destroy_decompress(&cinfo);
        fail("IoError", "corrupt JPEG: " + path);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, f);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    out = RgbImage(int(cinfo.output_width), int(cinfo.output_height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.data.data() +
                       std::size_t(3) * cinfo.output_width * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

} // namespace

LoadedImage load_image(const std::string& path) {
    FilePtr f = open_file(path, "rb");

    unsigned char sig[8] = {0};
    const std::size_t got = std::fread(sig, 1, sizeof(sig), f.get());
    std::rewind(f.get());

    RgbImage rgb;
    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    if (got >= 8 && std::memcmp(sig, png_sig, 8) == 0) {
        rgb = load_png_rgb(f.get(), path);
    } else if (got >= 2 && sig[0] == 0xff && sig[1] == 0xd8) {
        rgb = load_jpeg_rgb(f.get(), path);
    } else {
        fail("UnsupportedFormat", "not a PNG or JPEG file: " + path);
    }

    LoadedImage out;
    out.gray = to_grayscale(rgb);
    out.rgb = std::move(rgb);
    return out;
}

void save_png(const std::string& path, const RgbImage& image) {
    if (image.empty()) fail("IoError", "refusing to write an empty image");
    FilePtr f = open_file(path, "wb");

    std::jmp_buf jmp;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &jmp,
                                              png_error_fn, png_warning_fn);
    if (!png) fail("IoError", "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail("IoError", "libpng init failed");
    }
    if (setjmp(jmp)) {
        png_destroy_write_struct(&png, &info);
        fail("IoError", "PNG write failed: " + path);
    }

    png_init_io(png, f.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        png_write_row(png, const_cast<png_bytep>(image.pixel(0, y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace texfv
