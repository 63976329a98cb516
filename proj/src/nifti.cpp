#include "sdnd/nifti.hpp"

#include <cstring>
#include <fstream>

namespace sdnd {

namespace {

// NIfTI-1 header, 348 bytes. Only the fields this library uses are
// meaningful; the rest are kept for byte-exact layout.
#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;

template <typename T>
void byteswap(T& v) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
}

void swap_header(Nifti1Header& h) {
    byteswap(h.sizeof_hdr);
    byteswap(h.extents);
    byteswap(h.session_error);
    for (auto& d : h.dim) byteswap(d);
    byteswap(h.intent_p1);
    byteswap(h.intent_p2);
    byteswap(h.intent_p3);
    byteswap(h.intent_code);
    byteswap(h.datatype);
    byteswap(h.bitpix);
    byteswap(h.slice_start);
    for (auto& p : h.pixdim) byteswap(p);
    byteswap(h.vox_offset);
    byteswap(h.scl_slope);
    byteswap(h.scl_inter);
    byteswap(h.slice_end);
    byteswap(h.cal_max);
    byteswap(h.cal_min);
    byteswap(h.slice_duration);
    byteswap(h.toffset);
    byteswap(h.glmax);
    byteswap(h.glmin);
    byteswap(h.qform_code);
    byteswap(h.sform_code);
    byteswap(h.quatern_b);
    byteswap(h.quatern_c);
    byteswap(h.quatern_d);
    byteswap(h.qoffset_x);
    byteswap(h.qoffset_y);
    byteswap(h.qoffset_z);
    for (auto& v : h.srow_x) byteswap(v);
    for (auto& v : h.srow_y) byteswap(v);
    for (auto& v : h.srow_z) byteswap(v);
}

template <typename T>
void decode(const std::vector<char>& raw, bool swapped, std::vector<double>& out) {
    const std::size_t n = raw.size() / sizeof(T);
    out.resize(n);
    const T* src = reinterpret_cast<const T*>(raw.data());
    for (std::size_t i = 0; i < n; ++i) {
        T v = src[i];
        if (swapped) byteswap(v);
        out[i] = static_cast<double>(v);
    }
}

} // namespace

Volume4D read_nifti(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);

    Nifti1Header h{};
    f.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!f) throw FormatError(path + ": truncated NIfTI header");

    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        byteswap(h.sizeof_hdr);
        if (h.sizeof_hdr != 348) throw FormatError(path + ": bad sizeof_hdr, not a NIfTI-1 file");
        byteswap(h.sizeof_hdr); // restore; swap_header swaps everything once
        swap_header(h);
        swapped = true;
    }
    if (std::strncmp(h.magic, "n+1", 3) != 0)
        throw FormatError(path + ": bad magic, expected single-file NIfTI-1 (n+1)");
    if (h.dim[0] < 1 || h.dim[0] > 4)
        throw UnsupportedError(path + ": only 1..4 dimensional images are supported");

    int nx = h.dim[0] >= 1 ? h.dim[1] : 1;
    int ny = h.dim[0] >= 2 ? h.dim[2] : 1;
    int nz = h.dim[0] >= 3 ? h.dim[3] : 1;
    int nv = h.dim[0] >= 4 ? h.dim[4] : 1;
    if (nx < 1 || ny < 1 || nz < 1 || nv < 1)
        throw FormatError(path + ": non-positive dimension in header");

    std::size_t elem_size;
    switch (h.datatype) {
        case kDtUint8: elem_size = 1; break;
        case kDtInt16: elem_size = 2; break;
        case kDtInt32: elem_size = 4; break;
        case kDtFloat32: elem_size = 4; break;
        case kDtFloat64: elem_size = 8; break;
        default:
            throw UnsupportedError(path + ": unsupported datatype code " +
                                   std::to_string(h.datatype));
    }

    const std::size_t n = static_cast<std::size_t>(nx) * ny * nz * nv;
    std::size_t offset = static_cast<std::size_t>(h.vox_offset);
    if (offset < 348) offset = 352;
    f.seekg(0, std::ios::end);
    const std::size_t file_size = static_cast<std::size_t>(f.tellg());
    if (file_size < offset + n * elem_size)
        throw FormatError(path + ": payload smaller than header dims require");
    f.seekg(static_cast<std::streamoff>(offset));

    std::vector<char> raw(n * elem_size);
    f.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!f) throw FormatError(path + ": short read of image payload");

    Volume4D vol(nx, ny, nz, nv);
    switch (h.datatype) {
        case kDtUint8: decode<std::uint8_t>(raw, false, vol.data); break;
        case kDtInt16: decode<std::int16_t>(raw, swapped, vol.data); break;
        case kDtInt32: decode<std::int32_t>(raw, swapped, vol.data); break;
        case kDtFloat32: decode<float>(raw, swapped, vol.data); break;
        case kDtFloat64: decode<double>(raw, swapped, vol.data); break;
        default: break;
    }

    if (h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f)) {
        const double slope = h.scl_slope, inter = h.scl_inter;
        for (double& d : vol.data) d = d * slope + inter;
    }

    vol.voxel_size_mm = {h.pixdim[1] > 0 ? h.pixdim[1] : 1.0,
                         h.pixdim[2] > 0 ? h.pixdim[2] : 1.0,
                         h.pixdim[3] > 0 ? h.pixdim[3] : 1.0};
    vol.check_finite(path);
    return vol;
}

void write_nifti(const Volume4D& vol, const std::string& path, NiftiDtype dtype) {
    if (dtype != NiftiDtype::float32 && dtype != NiftiDtype::float64)
        throw UnsupportedError("write_nifti supports float32/float64 output only");

    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = vol.nv > 1 ? 4 : 3;
    h.dim[1] = static_cast<std::int16_t>(vol.nx);
    h.dim[2] = static_cast<std::int16_t>(vol.ny);
    h.dim[3] = static_cast<std::int16_t>(vol.nz);
    h.dim[4] = static_cast<std::int16_t>(vol.nv > 1 ? vol.nv : 1);
    for (int i = 5; i < 8; ++i) h.dim[i] = 1;
    h.datatype = dtype == NiftiDtype::float32 ? kDtFloat32 : kDtFloat64;
    h.bitpix = dtype == NiftiDtype::float32 ? 32 : 64;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = static_cast<float>(vol.voxel_size_mm[0]);
    h.pixdim[2] = static_cast<float>(vol.voxel_size_mm[1]);
    h.pixdim[3] = static_cast<float>(vol.voxel_size_mm[2]);
    for (int i = 4; i < 8; ++i) h.pixdim[i] = 1.0f;
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // mm
    h.magic[0] = 'n';
    h.magic[1] = '+';
    h.magic[2] = '1';
    h.magic[3] = '\0';

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(&h), sizeof(h));
    const char pad[4] = {0, 0, 0, 0};
    f.write(pad, 4);

    if (dtype == NiftiDtype::float64) {
        f.write(reinterpret_cast<const char*>(vol.data.data()),
                static_cast<std::streamsize>(vol.data.size() * sizeof(double)));
    } else {
        std::vector<float> buf(vol.data.size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(vol.data[i]);
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!f) throw IoError("short write to " + path);
}

BrainMask read_mask(const std::string& path) {
    Volume4D vol = read_nifti(path);
    if (vol.nv != 1) throw ShapeError(path + ": mask must be a 3D volume");
    BrainMask m(vol.nx, vol.ny, vol.nz);
    for (std::size_t i = 0; i < vol.data.size(); ++i) m.data[i] = vol.data[i] != 0.0 ? 1 : 0;
    if (m.count() == 0) throw DegenerateInputError(path + ": mask has no voxels set");
    return m;
}

void write_mask(const BrainMask& mask, const std::string& path,
                const std::array<double, 3>& voxel_size_mm) {
    Volume4D vol(mask.nx, mask.ny, mask.nz, 1);
    vol.voxel_size_mm = voxel_size_mm;
    for (std::size_t i = 0; i < mask.data.size(); ++i) vol.data[i] = mask.data[i] ? 1.0 : 0.0;
    write_nifti(vol, path, NiftiDtype::float32);
}

} // namespace sdnd
