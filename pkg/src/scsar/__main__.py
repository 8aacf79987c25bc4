#!/usr/bin/env python
from scsar.cli import main

main()
