from kalman_sgd.data.dataset import ArrayDataset, Dataset, as_arrays, iter_blocks
from kalman_sgd.data.synthetic import (
    CHUNK_SIZE,
    FeatureLaw,
    NoiseLaw,
    Response,
    SyntheticSpec,
    closed_form_Q,
    condition_profile_for,
    default_beta_star,
    generate,
    generate_arrays,
    generate_blocks,
    generate_dataset,
    make_spec,
)
from kalman_sgd.data.csv_stream import (
    CsvDataset,
    CsvSchema,
    CsvStream,
    RowPolicy,
    stream_csv,
    stream_records,
    write_observations,
)


__all__ = [
    'ArrayDataset',
    'CHUNK_SIZE',
    'CsvDataset',
    'CsvSchema',
    'CsvStream',
    'Dataset',
    'FeatureLaw',
    'NoiseLaw',
    'Response',
    'RowPolicy',
    'SyntheticSpec',
    'as_arrays',
    'closed_form_Q',
    'condition_profile_for',
    'default_beta_star',
    'generate',
    'generate_arrays',
    'generate_blocks',
    'generate_dataset',
    'iter_blocks',
    'make_spec',
    'stream_csv',
    'stream_records',
    'write_observations',
]
