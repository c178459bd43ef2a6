#include "patternflow/compress.hpp"

#include <zlib.h>

#include "patternflow/errors.hpp"

namespace patternflow {

Bytes gzip_compress(const Bytes& data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    raise("CorruptStream", "deflate init failed");

  gz_header header{};  // zeroed mtime/name for reproducible output
  header.os = 255;
  deflateSetHeader(&zs, &header);

  Bytes out(deflateBound(&zs, static_cast<uLong>(data.size())));
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) raise("CorruptStream", "deflate failed");
  out.resize(zs.total_out);
  return out;
}

Bytes gzip_decompress(const Bytes& data) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK)
    raise("CorruptStream", "inflate init failed");

  Bytes out;
  Bytes chunk(64 * 1024);
  zs.next_in = const_cast<Bytef*>(data.data());
  zs.avail_in = static_cast<uInt>(data.size());
  int rc = Z_OK;
  do {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      raise("CorruptStream", "gzip stream is damaged or truncated");
    }
    out.insert(out.end(), chunk.data(),
               chunk.data() + (chunk.size() - zs.avail_out));
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));

  bool complete = rc == Z_STREAM_END && zs.avail_in == 0;
  inflateEnd(&zs);
  if (!complete) raise("CorruptStream", "gzip stream is damaged or truncated");
  return out;
}

}  // namespace patternflow
