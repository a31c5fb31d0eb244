"""Small vision transformer, inference only.

Dim 384, depth 12, 6 heads, patch 8 or 16; module names match the
public self-distilled checkpoints so a downloaded state dict loads
directly. The forward pass returns the final-layer patch tokens four
ways: the block output (after the closing layer norm) and the key,
query, and value vectors of the last attention layer, heads
re-concatenated. Consumers pick one; computing all four is free.
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import WeightsUnavailableError

EMBED_DIM = 384
DEPTH = 12
HEADS = 6
RANDOM_SEED = 0  # "random" weights are one fixed model, not a fresh draw

CHECKPOINT_URLS = {
    8: "https://dl.fbaipublicfiles.com/dino/dino_deitsmall8_pretrain/"
       "dino_deitsmall8_pretrain.pth",
    16: "https://dl.fbaipublicfiles.com/dino/dino_deitsmall16_pretrain/"
        "dino_deitsmall16_pretrain.pth",
}

# standard ImageNet statistics, applied after scaling pixels to [0, 1]
PIXEL_MEAN = (0.485, 0.456, 0.406)
PIXEL_STD = (0.229, 0.224, 0.225)


class PatchEmbed(nn.Module):
    def __init__(self, patch_size, dim):
        super().__init__()
        self.proj = nn.Conv2d(3, dim, kernel_size=patch_size,
                              stride=patch_size)

    def forward(self, x):
        return self.proj(x).flatten(2).transpose(1, 2)


class Mlp(nn.Module):
    def __init__(self, dim, hidden):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden, dim)

    def forward(self, x):
        return self.fc2(self.act(self.fc1(x)))


class Attention(nn.Module):
    def __init__(self, dim, heads):
        super().__init__()
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x):
        b, n, d = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.heads, d // self.heads)
        q, k, v = qkv.permute(2, 0, 3, 1, 4).unbind(0)
        attn = ((q @ k.transpose(-2, -1)) * self.scale).softmax(dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        merge = lambda t: t.transpose(1, 2).reshape(b, n, d)
        return self.proj(out), {"query": merge(q), "key": merge(k),
                                "value": merge(v)}


class Block(nn.Module):
    def __init__(self, dim, heads):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim, eps=1e-6)
        self.attn = Attention(dim, heads)
        self.norm2 = nn.LayerNorm(dim, eps=1e-6)
        self.mlp = Mlp(dim, dim * 4)

    def forward(self, x):
        y, qkv = self.attn(self.norm1(x))
        x = x + y
        return x + self.mlp(self.norm2(x)), qkv


class VisionTransformer(nn.Module):
    """Fixed-size variant: built for one grid, no runtime interpolation."""

    def __init__(self, patch_size, grid):
        super().__init__()
        self.patch_size = patch_size
        self.grid = grid
        n = grid[0] * grid[1]
        self.cls_token = nn.Parameter(torch.zeros(1, 1, EMBED_DIM))
        self.pos_embed = nn.Parameter(torch.zeros(1, n + 1, EMBED_DIM))
        self.patch_embed = PatchEmbed(patch_size, EMBED_DIM)
        self.blocks = nn.ModuleList(
            Block(EMBED_DIM, HEADS) for _ in range(DEPTH))
        self.norm = nn.LayerNorm(EMBED_DIM, eps=1e-6)
        nn.init.normal_(self.cls_token, std=0.02)
        nn.init.normal_(self.pos_embed, std=0.02)

    def forward(self, pixels):
        """pixels (b, 3, h, w) -> dict of (b, n_patches, dim) token grids."""
        x = self.patch_embed(pixels)
        cls = self.cls_token.expand(x.shape[0], -1, -1)
        x = torch.cat((cls, x), dim=1) + self.pos_embed
        qkv = None
        for block in self.blocks:
            x, qkv = block(x)
        tokens = {"output": self.norm(x)}
        tokens.update(qkv)
        return {name: t[:, 1:] for name, t in tokens.items()}


def _interpolate_pos(pos, grid):
    # checkpoint grids are square (224 / patch); resample to ours
    n = pos.shape[1] - 1
    side = int(round(n ** 0.5))
    cls_part, patch_part = pos[:, :1], pos[:, 1:]
    patch_part = patch_part.reshape(1, side, side, EMBED_DIM) \
        .permute(0, 3, 1, 2)
    patch_part = F.interpolate(patch_part, size=grid, mode="bicubic",
                               align_corners=False)
    patch_part = patch_part.permute(0, 2, 3, 1).reshape(1, -1, EMBED_DIM)
    return torch.cat((cls_part, patch_part), dim=1)


def _fetch_checkpoint(url):
    import urllib.request
    from pathlib import Path
    cache = Path.home() / ".cache" / "gvrextract" / url.rsplit("/", 1)[-1]
    if not cache.exists():
        cache.parent.mkdir(parents=True, exist_ok=True)
        tmp = cache.with_suffix(".tmp")
        try:
            with urllib.request.urlopen(url, timeout=60) as resp, \
                    open(tmp, "wb") as out:
                out.write(resp.read())
        except Exception as exc:
            tmp.unlink(missing_ok=True)
            raise WeightsUnavailableError(
                f"could not download pretrained weights from {url}: {exc}; "
                f"pass model 'random' for an offline deterministic "
                f"extractor") from exc
        tmp.rename(cache)
    return torch.load(cache, map_location="cpu")


def build_model(model, patch_size, grid) -> VisionTransformer:
    """model "random": seeded init. model "dino": download checkpoint."""
    torch.manual_seed(RANDOM_SEED)
    net = VisionTransformer(patch_size, grid)
    if model == "dino":
        state = _fetch_checkpoint(CHECKPOINT_URLS[patch_size])
        state["pos_embed"] = _interpolate_pos(state["pos_embed"], grid)
        net.load_state_dict(state)
    net.eval()
    for p in net.parameters():
        p.requires_grad_(False)
    return net


def weights_available(patch_size=8) -> bool:
    """Cheap probe used by callers that want to skip pretrained paths."""
    import urllib.request
    req = urllib.request.Request(CHECKPOINT_URLS[patch_size], method="HEAD")
    try:
        with urllib.request.urlopen(req, timeout=5):
            return True
    except Exception:
        return False
