#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""\
Padkit: pooled attention distillation for continual vision transformers

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.
"""


if __name__ == '__main__':

    import sys
    from padkit.padkitapp import PadkitApp

    cmd = sys.argv[1:] if len(sys.argv) > 1 else []
    app = PadkitApp(command=cmd)
    sys.exit(app.run())
