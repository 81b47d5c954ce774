from senhar.datasets.base import ACTIVITIES, Recording, SampleSet
from senhar.datasets.cache import load_sampleset, save_sampleset
from senhar.datasets.hhar import ParseReport, load_hhar
from senhar.datasets.preprocess import (
    augment_gaussian,
    downsample,
    inject_label_noise,
    louo_users,
    preprocess,
    segment,
    split,
    stratified_subsample,
)
from senhar.datasets.synth import synth_dataset
from senhar.datasets.usc_had import load_usc_had

__all__ = [
    "ACTIVITIES",
    "ParseReport",
    "Recording",
    "SampleSet",
    "augment_gaussian",
    "downsample",
    "inject_label_noise",
    "load_hhar",
    "load_sampleset",
    "load_usc_had",
    "louo_users",
    "preprocess",
    "save_sampleset",
    "segment",
    "split",
    "stratified_subsample",
    "synth_dataset",
]
