import shlex
import sys

import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

from vocabdata import GLUE, KEYWORDS


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A small randomly-initialized causal LM with a word-level tokenizer,
    saved locally so the bridge loads it without any network access."""
    directory = tmp_path_factory.mktemp("tiny-causal-lm")
    words = ["<s>", "</s>", "<unk>", *GLUE, *KEYWORDS]
    vocab = {w: i for i, w in enumerate(words)}
    tok = Tokenizer(models.WordLevel(vocab, unk_token="<unk>"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        bos_token="<s>",
        eos_token="</s>",
        unk_token="<unk>",
    )
    fast.save_pretrained(directory)
    torch.manual_seed(1234)
    config = GPT2Config(
        vocab_size=len(vocab),
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=vocab["<s>"],
        eos_token_id=vocab["</s>"],
    )
    GPT2LMHeadModel(config).save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def bridge_cmd(tiny_model_dir):
    return (
        f"{shlex.quote(sys.executable)} -m k2t_bridge "
        f"--model {shlex.quote(str(tiny_model_dir))} --stdio"
    )
