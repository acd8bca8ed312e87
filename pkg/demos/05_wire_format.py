"""The binary tensor container and dataset round trip.

    python3 demos/05_wire_format.py
"""

import tempfile
from pathlib import Path

import numpy as np

from linsep import generate, load_dataset, read_tensor_file, write_dataset, write_tensor_file
from linsep.errors import ParseError
from linsep.synth import SynthConfig

workdir = Path(tempfile.mkdtemp(prefix="linsep-demo-"))

# One record: 20-byte header, UTF-8 id, float32 payload.
path = workdir / "single.lsce"
write_tensor_file(path, [("demo-image", np.array([[1.0, 2.0, 3.0]]))])
raw = path.read_bytes()
print(f"record bytes ({len(raw)}):", raw.hex(" "))
(image_id, tokens), = read_tensor_file(path)
print("parsed:", image_id, tokens)
print()

# Corruption is rejected with the exact byte offset.
(workdir / "broken.lsce").write_bytes(raw[:-4])
try:
    read_tensor_file(workdir / "broken.lsce")
except ParseError as exc:
    print(f"corrupt file rejected at byte {exc.offset}: {exc.reason}")
print()

# Full dataset round trip: values survive bit-exactly.
dataset = generate(SynthConfig(seed=9, dim=6, num_samples=10))
manifest_path = write_dataset(
    workdir / "ds", "demo-9", dataset.store, dataset.samples,
    predictions=[dataset.gen_predictions],
)
loaded = load_dataset(manifest_path)
image_id = dataset.samples[0].query
identical = np.array_equal(
    loaded.store.get(image_id, "vision").tokens,
    dataset.store.get(image_id, "vision").tokens,
)
print("wrote", sorted(p.name for p in (workdir / "ds").iterdir()))
print("round trip bit-exact:", identical)
