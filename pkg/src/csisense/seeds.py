"""Single-seed policy: every random consumer derives its own stream from the
run seed by a fixed offset, so components can be re-run in isolation."""

OFFSETS = {
    "init": 1,
    "shuffle": 2,
    "svm": 3,
}


def derive_seed(seed, consumer):
    return int(seed) * 1000 + OFFSETS[consumer]
