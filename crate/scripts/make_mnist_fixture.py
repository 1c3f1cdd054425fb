"""Build the small MNIST IDX fixture used by the test suites.

Source: the MIT-licensed `mnist` npm package (cazala/mnist), whose
src/digits/<d>.json files hold real MNIST digits as 28x28 floats in [0,1].

usage: python3 make_mnist_fixture.py <path/to/package/src/digits> <out_dir> [per_class]
"""
import gzip
import json
import struct
import sys

digits_dir, out_dir = sys.argv[1], sys.argv[2]
per_class = int(sys.argv[3]) if len(sys.argv) > 3 else 100

by_class = []
for d in range(10):
    flat = json.load(open(f"{digits_dir}/{d}.json"))["data"]
    imgs = [flat[i * 784:(i + 1) * 784] for i in range(len(flat) // 784)]
    by_class.append(imgs[:per_class])

images, labels = [], []
for i in range(per_class):
    for d in range(10):
        images.append(bytes(min(255, max(0, round(v * 255))) for v in by_class[d][i]))
        labels.append(d)

n = len(images)
with gzip.GzipFile(f"{out_dir}/mnist-sample-images-idx3-ubyte.gz", "wb", mtime=0) as f:
    f.write(struct.pack(">IIII", 2051, n, 28, 28))
    for img in images:
        f.write(img)
with gzip.GzipFile(f"{out_dir}/mnist-sample-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
    f.write(struct.pack(">II", 2049, n))
    f.write(bytes(labels))
print(f"wrote {n} images")
